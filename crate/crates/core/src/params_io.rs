//! Versioned text format for [`NetworkParameters`].
//!
//! ```text
//! mnn-parameters v1
//! topology 2 6 2
//! output_slope 1.0000000000000000e0
//! output_range none
//! w_input_hidden 2 6 <12 values, row-major>
//! f_input_hidden 2 6 ...
//! w_hidden_output 6 2 ...
//! f_hidden_output 6 2 ...
//! alpha_input 2 ...
//! alpha_hidden 6 ...
//! alpha_output 2 ...
//! beta_output 2 ...
//! ```
//!
//! Every value is written with 17 significant digits, which round-trips any
//! finite `f64` exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{MnnError, Result};
use crate::network::{Matrix, NetworkParameters, Topology};

pub const PARAMS_MAGIC: &str = "mnn-parameters";
pub const PARAMS_VERSION: &str = "v1";

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_values(out: &mut String, values: &[f64]) {
    for v in values {
        out.push(' ');
        out.push_str(&fmt_f64(*v));
    }
    out.push('\n');
}

pub fn params_to_text(params: &NetworkParameters) -> String {
    let t = &params.topology;
    let mut out = String::new();
    let _ = writeln!(out, "{PARAMS_MAGIC} {PARAMS_VERSION}");
    let _ = writeln!(out, "topology {} {} {}", t.n_inputs, t.n_hidden, t.n_outputs);
    let _ = writeln!(out, "output_slope {}", fmt_f64(t.output_slope));
    match t.output_range {
        Some(r) => {
            let _ = writeln!(out, "output_range {}", fmt_f64(r));
        }
        None => out.push_str("output_range none\n"),
    }
    for (name, m) in params.matrices() {
        let _ = write!(out, "{name} {} {}", m.rows(), m.cols());
        push_values(&mut out, m.as_slice());
    }
    for (name, v) in params.coefficients() {
        let _ = write!(out, "{name} {}", v.len());
        push_values(&mut out, v);
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line, split into the expected tag and the remaining tokens.
    fn field(&mut self, tag: &str) -> Result<(usize, Vec<&'a str>)> {
        loop {
            let Some((idx, line)) = self.inner.next() else {
                return Err(MnnError::Parse {
                    location: "end of input".into(),
                    message: format!("missing field `{tag}`"),
                });
            };
            let mut tokens = line.split_whitespace();
            match tokens.next() {
                None => continue,
                Some(t) if t == tag => return Ok((idx + 1, tokens.collect())),
                Some(t) => {
                    return Err(MnnError::Parse {
                        location: format!("line {}", idx + 1),
                        message: format!("expected field `{tag}`, found `{t}`"),
                    })
                }
            }
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> MnnError {
    MnnError::Parse {
        location: format!("line {line}"),
        message: message.into(),
    }
}

fn parse_usize(line: usize, tok: Option<&&str>) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing dimension"))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad dimension `{tok}`")))
}

fn parse_floats(line: usize, toks: &[&str], expected: usize) -> Result<Vec<f64>> {
    if toks.len() != expected {
        return Err(parse_err(line, format!("expected {expected} values, found {}", toks.len())));
    }
    toks.iter()
        .map(|t| t.parse::<f64>().map_err(|_| parse_err(line, format!("bad number `{t}`"))))
        .collect()
}

pub fn params_from_text(text: &str) -> Result<NetworkParameters> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (ln, header) = lines.field(PARAMS_MAGIC)?;
    if header.first() != Some(&PARAMS_VERSION) {
        return Err(parse_err(ln, format!("unsupported version {:?}", header.first())));
    }
    let (ln, dims) = lines.field("topology")?;
    if dims.len() != 3 {
        return Err(parse_err(ln, "topology needs three sizes"));
    }
    let mut topology = Topology::new(
        parse_usize(ln, dims.first())?,
        parse_usize(ln, dims.get(1))?,
        parse_usize(ln, dims.get(2))?,
    );
    let (ln, slope) = lines.field("output_slope")?;
    topology.output_slope = parse_floats(ln, &slope, 1)?[0];
    let (ln, range) = lines.field("output_range")?;
    topology.output_range = match range.as_slice() {
        ["none"] => None,
        toks => Some(parse_floats(ln, toks, 1)?[0]),
    };
    topology.validate()?;

    let mut params = NetworkParameters::zeros(&topology);
    let matrix = |lines: &mut Lines, tag: &str, rows: usize, cols: usize| -> Result<Matrix> {
        let (ln, toks) = lines.field(tag)?;
        let (r, c) = (parse_usize(ln, toks.first())?, parse_usize(ln, toks.get(1))?);
        if (r, c) != (rows, cols) {
            return Err(parse_err(ln, format!("{tag} is {r}x{c}, topology requires {rows}x{cols}")));
        }
        Matrix::from_row_major(r, c, parse_floats(ln, &toks[2..], r * c)?)
    };
    let vector = |lines: &mut Lines, tag: &str, len: usize| -> Result<Vec<f64>> {
        let (ln, toks) = lines.field(tag)?;
        let n = parse_usize(ln, toks.first())?;
        if n != len {
            return Err(parse_err(ln, format!("{tag} has length {n}, topology requires {len}")));
        }
        parse_floats(ln, &toks[1..], n)
    };
    let (i, h, o) = (topology.n_inputs, topology.n_hidden, topology.n_outputs);
    params.w_input_hidden = matrix(&mut lines, "w_input_hidden", i, h)?;
    params.f_input_hidden = matrix(&mut lines, "f_input_hidden", i, h)?;
    params.w_hidden_output = matrix(&mut lines, "w_hidden_output", h, o)?;
    params.f_hidden_output = matrix(&mut lines, "f_hidden_output", h, o)?;
    params.alpha_input = vector(&mut lines, "alpha_input", i)?;
    params.alpha_hidden = vector(&mut lines, "alpha_hidden", h)?;
    params.alpha_output = vector(&mut lines, "alpha_output", o)?;
    params.beta_output = vector(&mut lines, "beta_output", o)?;
    params.validate()?;
    Ok(params)
}

pub fn save_params(params: &NetworkParameters, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, params_to_text(params)).map_err(|e| MnnError::io(path, e))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<NetworkParameters> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| MnnError::io(path, e))?;
    params_from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::init_parameters;
    use proptest::prelude::*;

    #[test]
    fn header_and_layout() {
        let p = init_parameters(&Topology::default(), 1, 0.1).unwrap();
        let text = params_to_text(&p);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("mnn-parameters v1"));
        assert_eq!(lines.next(), Some("topology 2 6 2"));
        assert_eq!(text.lines().count(), 12);
    }

    #[test]
    fn rejects_wrong_version_and_shapes() {
        let p = init_parameters(&Topology::default(), 1, 0.1).unwrap();
        let text = params_to_text(&p);
        assert!(params_from_text(&text.replace("v1", "v9")).is_err());
        let broken = text.replace("w_hidden_output 6 2", "w_hidden_output 2 6");
        let err = params_from_text(&broken).unwrap_err();
        assert!(err.to_string().contains("line 7"), "{err}");
        assert!(params_from_text("").is_err());
    }

    #[test]
    fn output_range_survives() {
        let topo = Topology::default().with_output_range(Some(2.5)).with_output_slope(0.75);
        let p = init_parameters(&topo, 9, 0.1).unwrap();
        assert_eq!(params_from_text(&params_to_text(&p)).unwrap(), p);
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(seed in any::<u64>(), scale in 1e-300f64..1e300, a in 0.0f64..=1.0) {
            let mut p = init_parameters(&Topology::new(2, 3, 2), seed, scale).unwrap();
            p.alpha_hidden[1] = a;
            p.beta_output[0] = a / 3.0;
            let back = params_from_text(&params_to_text(&p)).unwrap();
            for ((_, x), (_, y)) in p.matrices().iter().zip(back.matrices().iter()) {
                let xb: Vec<u64> = x.as_slice().iter().map(|v| v.to_bits()).collect();
                let yb: Vec<u64> = y.as_slice().iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(xb, yb);
            }
            prop_assert_eq!(back, p);
        }
    }
}
