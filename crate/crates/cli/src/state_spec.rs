use nalgebra::DVector;
use num_complex::Complex64;

use moyal_core::states::State;
use moyal_core::{Error, Result};

/// Parses `pure:m`, `power:s`, `vector:FILE` or `mix:w1,SPEC1;w2,SPEC2` at
/// truncation `n`.
pub fn parse_state(spec: &str, n: usize) -> Result<State> {
    let (head, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::Configuration(format!("state spec `{spec}` needs a kind prefix (pure:, power:, vector:, mix:)")))?;
    match head {
        "pure" => {
            let m: usize = rest.trim().parse().map_err(|_| Error::Configuration(format!("bad basis index `{rest}`")))?;
            if m >= n {
                return Err(Error::Configuration(format!("basis index {m} outside truncation {n}")));
            }
            State::pure_basis(m, n)
        }
        "power" => {
            let s: f64 = rest.trim().parse().map_err(|_| Error::Configuration(format!("bad exponent `{rest}`")))?;
            State::power_law(s, n)
        }
        "vector" => State::vector(read_vector(rest, n)?),
        "mix" => {
            let mut parts = Vec::new();
            for piece in rest.split(';').filter(|p| !p.trim().is_empty()) {
                let (w, sub) = piece
                    .split_once(',')
                    .ok_or_else(|| Error::Configuration(format!("mixture part `{piece}` must read weight,spec")))?;
                let w: f64 = w.trim().parse().map_err(|_| Error::Configuration(format!("bad weight `{w}`")))?;
                parts.push((w, parse_state(sub.trim(), n)?));
            }
            State::mixture(parts)
        }
        _ => Err(Error::Configuration(format!("unknown state kind `{head}`"))),
    }
}

/// Reads a JSON vector, either real numbers or `[re, im]` pairs, padded with
/// zeros to length `n`.
fn read_vector(path: &str, n: usize) -> Result<DVector<Complex64>> {
    let text = std::fs::read_to_string(path.trim())?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let items = value.as_array().ok_or_else(|| Error::Configuration("vector file must hold a JSON array".into()))?;
    if items.len() > n {
        return Err(Error::Configuration(format!("vector of length {} exceeds truncation {n}", items.len())));
    }
    let mut v = DVector::zeros(n);
    for (k, item) in items.iter().enumerate() {
        v[k] = match item {
            serde_json::Value::Number(x) => Complex64::new(x.as_f64().unwrap_or(f64::NAN), 0.0),
            serde_json::Value::Array(pair) if pair.len() == 2 => {
                let re = pair[0].as_f64();
                let im = pair[1].as_f64();
                match (re, im) {
                    (Some(re), Some(im)) => Complex64::new(re, im),
                    _ => return Err(Error::Configuration(format!("entry {k} is not a number pair"))),
                }
            }
            _ => return Err(Error::Configuration(format!("entry {k} must be a number or [re, im]"))),
        };
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_kind() {
        assert_eq!(parse_state("pure:3", 8).unwrap().as_pure(), Some(3));
        assert!(parse_state("pure:8", 8).is_err());
        assert!(parse_state("power:1.2", 8).is_ok());
        let mix = parse_state("mix:0.25,pure:0;0.75,pure:2", 8).unwrap();
        assert!((mix.density()[(2, 2)].re - 0.75).abs() < 1e-15);
        assert!(parse_state("mix:0.5;0.5,pure:1", 8).is_err());
        assert!(parse_state("orbit:1", 8).is_err());
        assert!(parse_state("3", 8).is_err());
    }

    #[test]
    fn reads_vector_files() {
        let path = std::env::temp_dir().join(format!("moyal-vec-{}.json", std::process::id()));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        std::fs::write(&path, format!("[{h}, [0.0, {h}]]")).unwrap();
        let s = parse_state(&format!("vector:{}", path.display()), 8).unwrap();
        assert!((s.density()[(1, 1)].re - 0.5).abs() < 1e-12);
        std::fs::write(&path, "[1, 0, 0, 0, 0, 0, 0, 0, 0]").unwrap();
        assert!(parse_state(&format!("vector:{}", path.display()), 8).is_err());
        std::fs::remove_file(&path).unwrap();
    }
}
