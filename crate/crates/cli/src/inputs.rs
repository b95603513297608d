//! Parsing of channel, measurement, state and Hamiltonian specifications.
//!
//! A specification is either a name with optional arguments, such as
//! `depolarizing(0.3,3)`, or a path to a JSON file.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use qtb_core::channels::{ChannelJson, KrausChannel, MixedUnitaryJson};
use qtb_core::measure::Measurement;
use qtb_core::qmath::{DensityOperator, Observable};
use qtb_core::sampling::{random_channel, random_measurement, seeded_rng};

use crate::CliError;

/// RNG stream for objects drawn from `random(...)` specifications.
const SPEC_STREAM: u64 = 0x5eed;

fn looks_like_file(spec: &str) -> bool {
    spec.ends_with(".json") || spec.contains('/') || Path::new(spec).is_file()
}

fn read_file(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Validation(vec![format!("{path}: {e}")]))
}

/// Splits `name(a,b)` into `("name", ["a", "b"])`; a bare name has no arguments.
fn split_call(spec: &str) -> Result<(String, Vec<String>), CliError> {
    let spec = spec.trim();
    match spec.find('(') {
        None => Ok((spec.to_lowercase(), Vec::new())),
        Some(open) => {
            let inner = spec[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| bad(spec, "missing closing parenthesis"))?;
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(|s| s.trim().to_string()).collect()
            };
            Ok((spec[..open].trim().to_lowercase(), args))
        }
    }
}

fn bad(spec: &str, why: &str) -> CliError {
    CliError::Validation(vec![format!("cannot parse '{spec}': {why}")])
}

fn num<T: std::str::FromStr>(spec: &str, s: &str) -> Result<T, CliError> {
    s.parse().map_err(|_| bad(spec, &format!("'{s}' is not a valid number")))
}

fn arity(spec: &str, args: &[String], min: usize, max: usize) -> Result<(), CliError> {
    if args.len() < min || args.len() > max {
        return Err(bad(spec, &format!("expected {min}..={max} arguments, got {}", args.len())));
    }
    Ok(())
}

/// `identity[(d)]`, `werner-holevo`, `depolarizing(p[,d])`, `dephasing(p[,d])`,
/// `reset-to-ground[(d)]`, `amplitude-damping(g)`, `random(d[,rank])`, or a JSON file
/// holding either `{dim_in, dim_out, kraus}` or `{unitaries, probs}`.
pub fn parse_channel(spec: &str, seed: u64) -> Result<KrausChannel, CliError> {
    if looks_like_file(spec) {
        let text = read_file(spec)?;
        let value: serde_json::Value = parse_json(spec, &text)?;
        return if value.get("unitaries").is_some() {
            let mu: MixedUnitaryJson = parse_json(spec, &text)?;
            Ok(KrausChannel::mixed_unitary(&mu.unitaries, &mu.probs)?)
        } else {
            let raw: ChannelJson = parse_json(spec, &text)?;
            Ok(raw.into_channel()?)
        };
    }
    let (name, args) = split_call(spec)?;
    let dim_arg = |i: usize, default: usize| -> Result<usize, CliError> {
        args.get(i).map_or(Ok(default), |s| num(spec, s))
    };
    match name.as_str() {
        "identity" => {
            arity(spec, &args, 0, 1)?;
            Ok(KrausChannel::identity(dim_arg(0, 2)?))
        }
        "werner-holevo" => {
            arity(spec, &args, 0, 0)?;
            Ok(KrausChannel::werner_holevo())
        }
        "depolarizing" | "dephasing" => {
            arity(spec, &args, 1, 2)?;
            let p: f64 = num(spec, &args[0])?;
            let d = dim_arg(1, 2)?;
            Ok(if name == "depolarizing" {
                KrausChannel::depolarizing(d, p)?
            } else {
                KrausChannel::dephasing(d, p)?
            })
        }
        "reset-to-ground" => {
            arity(spec, &args, 0, 1)?;
            Ok(KrausChannel::reset_to_ground(dim_arg(0, 2)?))
        }
        "amplitude-damping" => {
            arity(spec, &args, 1, 1)?;
            Ok(KrausChannel::amplitude_damping(num(spec, &args[0])?)?)
        }
        "random" => {
            arity(spec, &args, 1, 2)?;
            let d = dim_arg(0, 2)?;
            let rank = dim_arg(1, 2)?;
            if d == 0 || rank == 0 {
                return Err(bad(spec, "dimension and rank must be positive"));
            }
            Ok(random_channel(&mut seeded_rng(seed, SPEC_STREAM), d, rank))
        }
        _ => Err(bad(spec, "unknown channel name")),
    }
}

/// `basisD` or `basis(d)`, `coin(d)`, `random(d,outcomes[,kraus])`, or a measurement JSON file.
pub fn parse_measurement(spec: &str, seed: u64) -> Result<Measurement, CliError> {
    if looks_like_file(spec) {
        let text = read_file(spec)?;
        return Measurement::from_json(&text).map_err(|e| CliError::Validation(vec![format!("{spec}: {e}")]));
    }
    let (name, args) = split_call(spec)?;
    if let Some(d) = name.strip_prefix("basis").filter(|d| !d.is_empty()) {
        arity(spec, &args, 0, 0)?;
        return Ok(Measurement::basis(positive(spec, num(spec, d)?)?));
    }
    match name.as_str() {
        "basis" | "coin" => {
            arity(spec, &args, 1, 1)?;
            let d = positive(spec, num(spec, &args[0])?)?;
            Ok(if name == "basis" { Measurement::basis(d) } else { Measurement::coin(d) })
        }
        "random" => {
            arity(spec, &args, 2, 3)?;
            let d = positive(spec, num(spec, &args[0])?)?;
            let n = positive(spec, num(spec, &args[1])?)?;
            let k = positive(spec, args.get(2).map_or(Ok(1), |s| num(spec, s))?)?;
            Ok(random_measurement(&mut seeded_rng(seed, SPEC_STREAM), d, n, k))
        }
        _ => Err(bad(spec, "unknown measurement name")),
    }
}

fn positive(spec: &str, n: usize) -> Result<usize, CliError> {
    if n == 0 {
        return Err(bad(spec, "dimension must be positive"));
    }
    Ok(n)
}

/// `mixed`, `basis:K`, `plus`, `diag:p0/p1/...`, or a JSON density matrix (rows of `[re, im]`).
pub fn parse_state(spec: &str, dim: usize) -> Result<DensityOperator, CliError> {
    let spec = spec.trim();
    let rho = if spec == "mixed" {
        DensityOperator::maximally_mixed(dim)
    } else if spec == "plus" {
        let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        DensityOperator::pure(&vec![amp; dim])?
    } else if let Some(k) = spec.strip_prefix("basis:") {
        let k: usize = num(spec, k)?;
        if k >= dim {
            return Err(bad(spec, &format!("basis index must be below {dim}")));
        }
        DensityOperator::basis(dim, k)
    } else if let Some(p) = spec.strip_prefix("diag:") {
        let pops = p.split('/').map(|s| num(spec, s.trim())).collect::<Result<Vec<f64>, _>>()?;
        DensityOperator::diagonal(&pops)?
    } else if looks_like_file(spec) {
        parse_json::<DensityOperator>(spec, &read_file(spec)?)?
    } else {
        return Err(bad(spec, "expected mixed, plus, basis:K, diag:p0/p1/... or a JSON file"));
    };
    if rho.dim() != dim {
        return Err(bad(spec, &format!("state has dimension {}, expected {dim}", rho.dim())));
    }
    Ok(rho)
}

/// Diagonal Hamiltonian from `energies`, a JSON matrix from `hamiltonian`, or `default`.
pub fn hamiltonian(
    energies: Option<&[f64]>,
    file: Option<&str>,
    dim: usize,
    default: impl FnOnce(usize) -> Observable,
) -> Result<Observable, CliError> {
    let h = match (energies, file) {
        (Some(_), Some(_)) => {
            return Err(CliError::Validation(vec!["give either energies or hamiltonian, not both".into()]))
        }
        (Some(e), None) => Observable::diagonal(e),
        (None, Some(path)) => parse_json::<Observable>(path, &read_file(path)?)?,
        (None, None) => default(dim),
    };
    if h.dim() != dim {
        return Err(CliError::Validation(vec![format!(
            "Hamiltonian has dimension {}, expected {dim}",
            h.dim()
        )]));
    }
    Ok(h)
}

/// Levels `0, 1/(d−1), …, 1`: a unit spectral width.
pub fn unit_ladder(dim: usize) -> Observable {
    let step = if dim > 1 { 1.0 / (dim - 1) as f64 } else { 0.0 };
    Observable::diagonal(&(0..dim).map(|j| j as f64 * step).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use qtb_core::channels::{is_unital, CLASSIFY_TOL};

    #[test]
    fn named_channels() {
        assert_eq!(parse_channel("identity", 0).unwrap().dim_in(), 2);
        assert_eq!(parse_channel("identity(4)", 0).unwrap().dim_in(), 4);
        assert!(is_unital(&parse_channel("werner-holevo", 0).unwrap(), CLASSIFY_TOL));
        assert_eq!(parse_channel("depolarizing(0.2, 3)", 0).unwrap().dim_in(), 3);
        assert!(!is_unital(&parse_channel("reset-to-ground", 0).unwrap(), CLASSIFY_TOL));
        assert!(parse_channel("amplitude-damping(1.5)", 0).is_err());
        assert!(parse_channel("nonsense", 0).is_err());
        assert!(parse_channel("dephasing(0.1", 0).is_err());
        let a = parse_channel("random(3)", 7).unwrap();
        let b = parse_channel("random(3)", 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn named_measurements() {
        assert_eq!(parse_measurement("basis2", 0).unwrap().outcome_count(), 2);
        assert_eq!(parse_measurement("basis(3)", 0).unwrap().dim(), 3);
        assert_eq!(parse_measurement("random(2,3,2)", 1).unwrap().outcome_count(), 3);
        assert!(parse_measurement("basis0", 0).is_err());
    }

    #[test]
    fn states() {
        assert_eq!(parse_state("mixed", 3).unwrap(), DensityOperator::maximally_mixed(3));
        assert_eq!(parse_state("basis:1", 2).unwrap(), DensityOperator::basis(2, 1));
        assert!(parse_state("basis:2", 2).is_err());
        assert!(parse_state("diag:0.5/0.5", 2).is_ok());
        assert!(parse_state("diag:0.5/0.5", 3).is_err());
        assert!(matches!(parse_state("diag:0.5/x", 2), Err(CliError::Validation(_))));
        let plus = parse_state("plus", 2).unwrap();
        assert!((plus.matrix()[(0, 1)].re - 0.5).abs() < 1e-15);
    }
}
