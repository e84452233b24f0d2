//! Reading traces back from their JSON dump, for `validate`.

use std::collections::BTreeMap;

use qbmc_core::encoder::EncodingKind;
use qbmc_core::scalar::parse_rational;
use qbmc_core::trace::{State, StepKind, Trace, TraceSource, TraceStep};
use qbmc_core::Rational;
use serde_json::Value;

use crate::CliError;

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Usage(format!("trace: {}", msg.into()))
}

fn rational(v: &Value, what: &str) -> Result<Rational, CliError> {
    v.as_str().and_then(parse_rational).ok_or_else(|| bad(format!("{what} is not an exact rational string")))
}

fn state(v: &Value) -> Result<State, CliError> {
    let location = v["location"].as_str().ok_or_else(|| bad("state without location"))?.to_string();
    let vals = v["valuation"].as_object().ok_or_else(|| bad("state without valuation"))?;
    let valuation = vals
        .iter()
        .map(|(k, x)| Ok((k.clone(), rational(x, k)?)))
        .collect::<Result<BTreeMap<_, _>, CliError>>()?;
    Ok(State { location, valuation })
}

/// Inverse of `trace_to_json`.
pub fn trace_from_json(v: &Value) -> Result<Trace, CliError> {
    let source = match v["source"].as_str() {
        Some("qf") => TraceSource::Encoding(EncodingKind::QuantifierFree),
        Some("quantified") => TraceSource::Encoding(EncodingKind::Quantified),
        Some("oracle") => TraceSource::Oracle,
        _ => return Err(bad("unknown source")),
    };
    let k = v["k"].as_u64().ok_or_else(|| bad("missing k"))? as usize;
    let initial = state(&v["initial"])?;
    let steps = v["steps"]
        .as_array()
        .ok_or_else(|| bad("missing steps"))?
        .iter()
        .map(|s| {
            let kind = match s["kind"].as_str() {
                Some("discrete") => StepKind::Discrete(
                    s["detail"]["transition"].as_u64().ok_or_else(|| bad("discrete step without transition"))? as usize,
                ),
                Some("trajectory") => StepKind::Trajectory(rational(&s["detail"]["dwell"], "dwell")?),
                Some("stutter") => StepKind::Stutter,
                _ => return Err(bad("unknown step kind")),
            };
            Ok(TraceStep { kind, pre: state(&s["pre"])?, post: state(&s["post"])? })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Trace { initial, steps, source, k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use qbmc_core::trace::trace_to_json;

    #[test]
    fn json_round_trip() {
        let ha = crate::load_model("example").unwrap().automaton;
        let s = |x: i64| State {
            location: "loc1".into(),
            valuation: BTreeMap::from([("x".to_string(), Rational::from_integer(x.into()))]),
        };
        let trace = Trace {
            initial: s(0),
            steps: vec![
                TraceStep { kind: StepKind::Trajectory(Rational::new(3.into(), 2.into())), pre: s(0), post: s(1) },
                TraceStep { kind: StepKind::Stutter, pre: s(1), post: s(1) },
            ],
            source: TraceSource::Oracle,
            k: 2,
        };
        assert_eq!(trace_from_json(&trace_to_json(&ha, &trace)).unwrap(), trace);
    }
}
