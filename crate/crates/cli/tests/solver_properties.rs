//! Properties that need the external solver, over seeded random automata.

use std::time::Duration;

use proptest::prelude::*;
use qbmc_cli::{solve_at, Engine, Verdict};
use qbmc_core::automaton::{HybridAutomaton, VarKind};
use qbmc_core::encoder::{encode, frame_symbol, loc_symbol, DeltaMode, EncodingKind, EncodingOptions};
use qbmc_core::model::random::{random_automaton, RandomParams};
use qbmc_core::oracle::DEFAULT_PATH_BUDGET;
use qbmc_core::smt::{default_solver_command, run_solver, SolverStatus};
use qbmc_core::trace::{decode_trace, validate_trace, ValidationMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TIMEOUT: Duration = Duration::from_secs(60);

fn automaton(seed: u64) -> HybridAutomaton {
    random_automaton(&mut ChaCha8Rng::seed_from_u64(seed), &RandomParams::default())
}

fn verdict(ha: &HybridAutomaton, k: usize, engine: Engine, options: &EncodingOptions) -> Verdict {
    solve_at(ha, k, engine, options, &default_solver_command(), TIMEOUT, DEFAULT_PATH_BUDGET).unwrap().verdict
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn verdicts_are_monotone_in_k(seed in any::<u64>()) {
        let ha = automaton(seed);
        let opts = EncodingOptions::default();
        let vs: Vec<Verdict> = (0..=4).map(|k| verdict(&ha, k, Engine::Qf, &opts)).collect();
        if let Some(first) = vs.iter().position(|v| *v == Verdict::Sat) {
            prop_assert!(vs[first..].iter().all(|v| *v == Verdict::Sat), "{:?}", vs);
        }
    }

    #[test]
    fn shared_delta_sat_implies_per_step_sat(seed in any::<u64>(), k in 1usize..5, quantified in any::<bool>()) {
        let ha = automaton(seed);
        let engine = if quantified { Engine::Quantified } else { Engine::Qf };
        let shared = EncodingOptions { delta_mode: DeltaMode::Shared, ..EncodingOptions::default() };
        if verdict(&ha, k, engine, &shared) == Verdict::Sat {
            prop_assert_eq!(verdict(&ha, k, engine, &EncodingOptions::default()), Verdict::Sat);
        }
    }

    #[test]
    fn decoded_states_match_the_model(seed in any::<u64>(), k in 0usize..5) {
        let ha = automaton(seed);
        let script = encode(&ha, k, EncodingKind::QuantifierFree, &EncodingOptions::default()).unwrap();
        let run = run_solver(&script, &default_solver_command(), TIMEOUT);
        prop_assume!(run.status == SolverStatus::Sat);
        let model = run.model.expect("model on sat");
        let trace = decode_trace(&model, &ha, k, EncodingKind::QuantifierFree).unwrap();
        let states: Vec<_> = trace.states().collect();
        prop_assert_eq!(states.len(), k + 1);
        for (i, s) in states.iter().enumerate() {
            let code = model.bitvec(&loc_symbol(i)).unwrap() as usize;
            prop_assert_eq!(&s.location, &ha.locations[code].name);
            for v in ha.vars.iter().filter(|v| matches!(v.kind, VarKind::Real)) {
                prop_assert_eq!(Some(&s.valuation[&v.name]), model.real(&frame_symbol(&v.name, i)));
            }
        }
        let check = validate_trace(&ha, &trace, ValidationMode::Midpoint);
        prop_assert!(check.is_counterexample(), "{:?}", check.violations);
    }
}
