//! Text formats: polynomial coefficient files, `x,P(x)` curves and dense
//! complex matrix files.

use crate::chebpoly::{ChebPoly, Parity};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use num_complex::Complex64;
use std::fmt::Write as _;
use std::io::Write;

/// Rows in an emitted curve.
pub const CURVE_POINTS: usize = 1000;

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        message: message.into(),
    })
}

/// Numbered lines with comments and blank lines removed.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// ```text
/// degree 3
/// parity odd
/// c_0 0.0000000000000000e0
/// ...
/// ```
pub fn format_poly(p: &ChebPoly) -> String {
    let mut out = format!("degree {}\nparity {}\n", p.degree(), p.parity());
    for (k, c) in p.coeffs().iter().enumerate() {
        writeln!(out, "c_{k} {c:.16e}").expect("writing to a String");
    }
    out
}

pub fn parse_poly(text: &str) -> Result<ChebPoly> {
    let mut degree = None;
    let mut parity = None;
    let mut coeffs: Vec<Option<f64>> = Vec::new();
    for (line, l) in content_lines(text) {
        let mut parts = l.split_whitespace();
        let (Some(key), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return parse_err(line, format!("expected `key value`, got `{l}`"));
        };
        match key {
            "degree" => match value.parse::<usize>() {
                Ok(d) => degree = Some(d),
                Err(e) => return parse_err(line, format!("bad degree `{value}`: {e}")),
            },
            "parity" => match value.parse::<Parity>() {
                Ok(p) => parity = Some(p),
                Err(e) => return parse_err(line, e.to_string()),
            },
            _ => {
                let Some(k) = key.strip_prefix("c_").and_then(|k| k.parse::<usize>().ok()) else {
                    return parse_err(line, format!("unknown key `{key}`"));
                };
                let Ok(c) = value.parse::<f64>() else {
                    return parse_err(line, format!("bad coefficient `{value}`"));
                };
                if coeffs.len() <= k {
                    coeffs.resize(k + 1, None);
                }
                if coeffs[k].replace(c).is_some() {
                    return parse_err(line, format!("duplicate coefficient c_{k}"));
                }
            }
        }
    }
    let Some(degree) = degree else {
        return parse_err(0, "missing `degree` line");
    };
    if coeffs.len() != degree + 1 || coeffs.iter().any(Option::is_none) {
        return parse_err(0, format!("expected coefficients c_0 .. c_{degree}"));
    }
    let poly = ChebPoly::new(coeffs.into_iter().map(Option::unwrap).collect())?;
    if poly.degree() != degree {
        return parse_err(0, format!("leading coefficient c_{degree} is zero"));
    }
    if let Some(p) = parity {
        if p != poly.parity() {
            return parse_err(0, format!("declared parity {p} but coefficients are {}", poly.parity()));
        }
    }
    Ok(poly)
}

/// `CURVE_POINTS` equally spaced samples of `p` on `[-1, 1]`.
pub fn write_curve<W: Write>(p: &ChebPoly, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "P(x)"])?;
    for i in 0..CURVE_POINTS {
        let x = (-1.0 + 2.0 * i as f64 / (CURVE_POINTS - 1) as f64).clamp(-1.0, 1.0);
        w.write_record([format!("{x:.16e}"), format!("{:.16e}", p.eval(x)?)])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `re`, `re+imj`, `re-imj` or `imj`.
pub fn parse_complex(token: &str) -> Option<Complex64> {
    let Some(body) = token.strip_suffix('j') else {
        return token.parse().ok().map(|re| Complex64::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => {
            let re = body[..i].parse().ok()?;
            let im = body[i..].parse().ok()?;
            Some(Complex64::new(re, im))
        }
        None => body.parse().ok().map(|im| Complex64::new(0.0, im)),
    }
}

pub fn format_complex(z: Complex64) -> String {
    format!("{:.16e}{:+.16e}j", z.re, z.im)
}

/// `dim n` followed by `n` rows of `n` entries.
pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let mut lines = content_lines(text);
    let Some((line, header)) = lines.next() else {
        return parse_err(1, "empty matrix file");
    };
    let n = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["dim", n] => match n.parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => return parse_err(line, format!("bad dimension `{n}`")),
        },
        _ => return parse_err(line, format!("expected `dim <n>`, got `{header}`")),
    };
    let mut m = CMatrix::zeros(n, n);
    let mut row = 0;
    for (line, l) in lines {
        if row == n {
            return parse_err(line, format!("more than {n} rows"));
        }
        let entries: Vec<&str> = l.split_whitespace().collect();
        if entries.len() != n {
            return parse_err(line, format!("expected {n} entries, got {}", entries.len()));
        }
        for (col, tok) in entries.into_iter().enumerate() {
            match parse_complex(tok) {
                Some(z) => m[(row, col)] = z,
                None => return parse_err(line, format!("bad complex entry `{tok}`")),
            }
        }
        row += 1;
    }
    if row != n {
        return parse_err(0, format!("expected {n} rows, got {row}"));
    }
    Ok(m)
}

pub fn format_matrix(m: &CMatrix) -> String {
    let mut out = format!("dim {}\n", m.nrows());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format_complex(m[(r, c)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn poly_text_example() {
        let text = format_poly(&ChebPoly::linear_step());
        assert!(text.starts_with("degree 1\nparity none\nc_0 5.0000000000000000e-1\n"));
        assert_eq!(parse_poly(&text).unwrap(), ChebPoly::linear_step());
    }

    #[test]
    fn poly_parse_errors() {
        assert!(matches!(parse_poly("degree 1\nc_0 0.5\n"), Err(Error::Parse { .. })));
        assert!(parse_poly("degree 1\nparity odd\nc_0 0.5\nc_1 0.5\n").is_err());
        assert!(parse_poly("degree x\n").is_err());
        assert!(parse_poly("degree 0\nc_0 0.5\nc_0 0.5\n").is_err());
        assert!(parse_poly("c_0 0.5\n").is_err());
    }

    #[test]
    fn curve_has_header_and_rows() {
        let mut buf = Vec::new();
        write_curve(&ChebPoly::linear_step(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,P(x)");
        assert_eq!(lines.len(), CURVE_POINTS + 1);
        assert_eq!(lines[1], "-1.0000000000000000e0,0.0000000000000000e0");
        assert_eq!(lines[CURVE_POINTS], "1.0000000000000000e0,1.0000000000000000e0");
    }

    #[test]
    fn complex_tokens() {
        assert_eq!(parse_complex("0.5"), Some(c(0.5, 0.0)));
        assert_eq!(parse_complex("1+2j"), Some(c(1.0, 2.0)));
        assert_eq!(parse_complex("-1.5e-3-2.5E+2j"), Some(c(-1.5e-3, -250.0)));
        assert_eq!(parse_complex("-3j"), Some(c(0.0, -3.0)));
        assert_eq!(parse_complex("1e5+0j"), Some(c(1e5, 0.0)));
        assert_eq!(parse_complex("abc"), None);
        assert_eq!(parse_complex("1+j"), None);
        let z = c(-0.1, 1.0 / 3.0);
        assert_eq!(parse_complex(&format_complex(z)), Some(z));
    }

    #[test]
    fn matrix_file() {
        let text = "# comment\ndim 2\n0.5+0j 0+0.1j\n0-0.1j -0.25\n";
        let m = parse_matrix(text).unwrap();
        assert_eq!(m[(0, 1)], c(0.0, 0.1));
        assert_eq!(m[(1, 1)], c(-0.25, 0.0));
        assert_eq!(parse_matrix(&format_matrix(&m)).unwrap(), m);
    }

    #[test]
    fn matrix_errors_name_lines() {
        match parse_matrix("dim 2\n1 2\n3 x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("size 2\n").is_err());
        assert!(parse_matrix("dim 2\n1 2\n").is_err());
        assert!(parse_matrix("dim 1\n1\n2\n").is_err());
        assert!(parse_matrix("dim 0\n").is_err());
    }
}
