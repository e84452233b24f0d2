//! Model loading (files and built-in benchmark names) and generation.

use std::path::Path;

use qbmc_core::automaton::{validate_automaton, HybridAutomaton};
use qbmc_core::model::{gen_example, gen_fischer, gen_lynch_shavit, parse_model, serialize_model, ModelDocument};
use qbmc_core::scalar::parse_rational;
use qbmc_core::{Rational, Scalar};

use crate::CliError;

/// Parameters of the built-in Fischer rows.
pub const FISCHER_SAFE: (i64, i64) = (5, 70);
pub const FISCHER_UNSAFE: (i64, i64) = (75, 70);
pub const LYNCH_SHAVIT: (i64, i64) = (5, 70);
/// Flow rates `a1, b1, a2, b2` of the built-in `example`.
pub const EXAMPLE_RATES: [i64; 4] = [0, 1, 0, 2];

#[derive(Clone, Debug)]
pub struct LoadedModel {
    pub name: String,
    pub document: ModelDocument,
    /// The resolved, validated automaton to check.
    pub automaton: HybridAutomaton,
}

fn r(n: i64) -> Rational {
    Rational::from_i64(n)
}

/// Built-in names: `example`, `fischer-safe-N`, `fischer-unsafe-N`,
/// `lynch-shavit-N`.
pub fn builtin(name: &str) -> Option<Result<ModelDocument, CliError>> {
    let gen_err = |e: qbmc_core::model::GenError| CliError::Usage(format!("{name}: {e}"));
    let n_of = |prefix: &str| name.strip_prefix(prefix).and_then(|n| n.parse::<u32>().ok());
    if name == "example" {
        let [a1, b1, a2, b2] = EXAMPLE_RATES;
        return Some(gen_example(r(a1), r(b1), r(a2), r(b2)).map_err(gen_err));
    }
    if let Some(n) = n_of("fischer-safe-") {
        return Some(gen_fischer(n, r(FISCHER_SAFE.0), r(FISCHER_SAFE.1)).map_err(gen_err));
    }
    if let Some(n) = n_of("fischer-unsafe-") {
        return Some(gen_fischer(n, r(FISCHER_UNSAFE.0), r(FISCHER_UNSAFE.1)).map_err(gen_err));
    }
    if let Some(n) = n_of("lynch-shavit-") {
        return Some(gen_lynch_shavit(n, r(LYNCH_SHAVIT.0), r(LYNCH_SHAVIT.1)).map_err(gen_err));
    }
    None
}

/// Resolves and validates a document.
pub fn prepare(name: &str, document: ModelDocument) -> Result<LoadedModel, CliError> {
    let model_err = |message: String| CliError::Model { path: name.to_string(), message };
    let automaton = document.resolve().map_err(|e| model_err(e.to_string()))?;
    let report = validate_automaton(&automaton);
    if !report.is_ok() {
        let lines: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(model_err(lines.join("; ")));
    }
    Ok(LoadedModel { name: name.to_string(), document, automaton })
}

/// A model file path or a built-in name. Existing files take precedence.
pub fn load_model(spec: &str) -> Result<LoadedModel, CliError> {
    let path = Path::new(spec);
    let document = if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        parse_model::<Rational>(&text).map_err(|e| CliError::Model { path: spec.to_string(), message: e.to_string() })?
    } else {
        match builtin(spec) {
            Some(doc) => doc?,
            None => return Err(CliError::Usage(format!("`{spec}` is neither a model file nor a built-in model"))),
        }
    };
    prepare(spec, document)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Example,
    Fischer,
    LynchShavit,
}

impl std::str::FromStr for Family {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "example" => Ok(Family::Example),
            "fischer" => Ok(Family::Fischer),
            "lynch-shavit" => Ok(Family::LynchShavit),
            other => Err(CliError::Usage(format!("unknown family `{other}` (example, fischer, lynch-shavit)"))),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct GenerateParams {
    pub n: Option<u32>,
    pub delta1: Option<String>,
    pub delta2: Option<String>,
    /// `a1,b1,a2,b2` for the example.
    pub rates: Option<String>,
}

fn rational_arg(flag: &str, text: &str) -> Result<Rational, CliError> {
    parse_rational(text.trim()).ok_or_else(|| CliError::Usage(format!("{flag}: `{text}` is not a rational")))
}

/// The model file text for a generator family.
pub fn cmd_generate(family: Family, p: &GenerateParams) -> Result<String, CliError> {
    let gen_err = |e: qbmc_core::model::GenError| CliError::Usage(e.to_string());
    let deltas = |default: (i64, i64)| -> Result<(Rational, Rational), CliError> {
        Ok((
            p.delta1.as_deref().map(|t| rational_arg("--delta1", t)).transpose()?.unwrap_or_else(|| r(default.0)),
            p.delta2.as_deref().map(|t| rational_arg("--delta2", t)).transpose()?.unwrap_or_else(|| r(default.1)),
        ))
    };
    let doc = match family {
        Family::Example => {
            let rates = match &p.rates {
                None => EXAMPLE_RATES.map(r).to_vec(),
                Some(t) => t.split(',').map(|x| rational_arg("--rates", x)).collect::<Result<Vec<_>, _>>()?,
            };
            let [a1, b1, a2, b2]: [Rational; 4] =
                rates.try_into().map_err(|_| CliError::Usage("--rates needs four values a1,b1,a2,b2".into()))?;
            gen_example(a1, b1, a2, b2).map_err(gen_err)?
        }
        Family::Fischer => {
            let (d1, d2) = deltas(FISCHER_SAFE)?;
            gen_fischer(p.n.unwrap_or(2), d1, d2).map_err(gen_err)?
        }
        Family::LynchShavit => {
            let (d1, d2) = deltas(LYNCH_SHAVIT)?;
            gen_lynch_shavit(p.n.unwrap_or(2), d1, d2).map_err(gen_err)?
        }
    };
    Ok(serialize_model(&doc))
}
