//! Fixtures shared by the criterion benchmarks.

use tdm_core::scheduler::{diagonal_load, scenario_quadratic_form};
use tdm_core::{QuadraticForm, Scenario};

/// Loaded quadratic form for a scenario, weighted by 2|α_k|².
pub fn loaded_form(scenario: &Scenario) -> QuadraticForm {
    let s = scenario_quadratic_form(scenario, &scenario.detection_weights()).expect("valid scenario");
    diagonal_load(&s).expect("eigensolver")
}
