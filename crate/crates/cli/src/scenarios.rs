//! Built-in scenarios, each a complete configuration with its assertions.

use crate::config::{parse, ExperimentConfig};

pub struct Scenario {
    pub name: &'static str,
    pub summary: &'static str,
    json: &'static str,
}

impl Scenario {
    pub fn config(&self) -> ExperimentConfig {
        parse(self.json).unwrap_or_else(|e| panic!("built-in scenario {} is malformed: {e:?}", self.name))
    }

    pub fn json(&self) -> &'static str {
        self.json
    }
}

pub const SCENARIOS: &[Scenario] = &[
    Scenario {
        name: "weyl-zero-field-sanity",
        summary: "calibrated Weyl frame, quantizer and Weyl system checks at B = 0, n = 1, N = 16",
        json: r#"{
  "scenario": "weyl-zero-field-sanity",
  "setup": {"n": 1, "size": 16},
  "family": {"kind": "random-states", "count": 4},
  "diagnostics": ["frame-identities", "quantizer-unitarity", "weyl-calculus"],
  "assertions": [
    {"metric": "frame-identities.calibration_relative_error", "op": "<=", "value": 1e-6},
    {"metric": "frame-identities.resolution_residual", "op": "<=", "value": 1e-10},
    {"metric": "frame-identities.analysis_isometry", "op": "<=", "value": 1e-10},
    {"metric": "frame-identities.reproducing_residual", "op": "<=", "value": 1e-8},
    {"metric": "quantizer-unitarity.hs_residual", "op": "<=", "value": 1e-8},
    {"metric": "quantizer-unitarity.surjectivity_defect", "op": "<=", "value": 1e-8},
    {"metric": "weyl-calculus.unitarity", "op": "<=", "value": 1e-12},
    {"metric": "weyl-calculus.composition_residual", "op": "<=", "value": 1e-9},
    {"metric": "weyl-calculus.cocycle_zero_field", "op": "<=", "value": 1e-12}
  ]
}"#,
    },
    Scenario {
        name: "magnetic-calculus-symmetric-gauge",
        summary: "composition law and gauge covariance for constant B in the symmetric gauge, n = 2, N = 16",
        json: r#"{
  "scenario": "magnetic-calculus-symmetric-gauge",
  "setup": {"n": 2, "size": 16, "field": {"kind": "symmetric-gauge", "b": 0.5}},
  "family": {"kind": "random-states", "count": 1},
  "diagnostics": ["weyl-calculus"],
  "assertions": [
    {"metric": "weyl-calculus.unitarity", "op": "<=", "value": 1e-12},
    {"metric": "weyl-calculus.composition_residual", "op": "<=", "value": 1e-9},
    {"metric": "weyl-calculus.composition_support_ok", "op": ">=", "value": 1},
    {"metric": "weyl-calculus.cocycle_zero_field", "op": "<=", "value": 1e-12}
  ],
  "seed": 7
}"#,
    },
    Scenario {
        name: "gauge-covariance-1d",
        summary: "gauge covariance of the magnetic Weyl quantization under linear and quadratic gauge changes",
        json: r#"{
  "scenario": "gauge-covariance-1d",
  "setup": {"n": 1, "size": 32, "h": 0.5, "field": {"kind": "polynomial", "components": [[{"coef": 0.2, "powers": [1]}]]}},
  "family": {"kind": "random-states", "count": 1},
  "diagnostics": ["weyl-calculus"],
  "assertions": [
    {"metric": "weyl-calculus.gauge_linear", "op": "<=", "value": 1e-9},
    {"metric": "weyl-calculus.gauge_quadratic", "op": "<=", "value": 1e-9},
    {"metric": "weyl-calculus.unitarity", "op": "<=", "value": 1e-12}
  ]
}"#,
    },
    Scenario {
        name: "commutator-refinement",
        summary: "magnetic momentum commutator against the field under refinement N = 16, 32, 64",
        json: r#"{
  "scenario": "commutator-refinement",
  "setup": {"n": 2, "size": 16, "field": {"kind": "symmetric-gauge", "b": 0.8}},
  "family": {"kind": "random-states", "count": 1},
  "diagnostics": ["commutator-refinement"],
  "assertions": [
    {"metric": "commutator-refinement.min_order", "op": ">=", "value": 2},
    {"metric": "commutator-refinement.decreasing", "op": ">=", "value": 1}
  ]
}"#,
    },
    Scenario {
        name: "hs-expansion",
        summary: "Hilbert-Schmidt expansion in magnetic Hermite products, n = 1, N = 16, A = 0.3 y^2",
        json: r#"{
  "scenario": "hs-expansion",
  "setup": {"n": 1, "size": 16, "field": {"kind": "polynomial", "components": [[{"coef": 0.3, "powers": [2]}]]}},
  "family": {"kind": "random-states", "count": 1},
  "diagnostics": ["hs-expansion"],
  "assertions": [
    {"metric": "hs-expansion.full_relative_residual", "op": "<=", "value": 1e-8},
    {"metric": "hs-expansion.monotone", "op": ">=", "value": 1}
  ],
  "seed": 3
}"#,
    },
    Scenario {
        name: "coherent-orbit-positive",
        summary: "positive control: coherent orbit over a bounded phase-space patch, n = 1, N = 128",
        json: r#"{
  "scenario": "coherent-orbit-positive",
  "setup": {"n": 1, "size": 128},
  "family": {"kind": "gaussian-orbit", "radius": 2},
  "diagnostics": ["tightness-profile", "pi-cc", "equicontinuity", "uv-modulus", "compactness-proxy"],
  "assertions": [
    {"metric": "tightness-profile.final_nontrivial", "op": "<=", "value": 1e-6},
    {"metric": "tightness-profile.nonincreasing", "op": ">=", "value": 1},
    {"metric": "pi-cc.largest_proper", "op": "<=", "value": 1e-4},
    {"metric": "uv-modulus.translation_one_step", "op": "<=", "value": 0.2},
    {"metric": "uv-modulus.modulation_one_step", "op": "<=", "value": 0.2}
  ]
}"#,
    },
    Scenario {
        name: "escaping-translates-negative",
        summary: "negative control: coherent states escaping to the phase-space corner, n = 1, N = 128",
        json: r#"{
  "scenario": "escaping-translates-negative",
  "setup": {"n": 1, "size": 128},
  "family": {"kind": "escaping-translates", "count": 8},
  "diagnostics": ["tightness-profile", "pi-cc", "equicontinuity", "qp-tightness", "compactness-proxy"],
  "assertions": [
    {"metric": "tightness-profile.floor_ratio", "op": ">=", "value": 0.5},
    {"metric": "qp-tightness.min_phi_term", "op": ">=", "value": 0.5}
  ]
}"#,
    },
    Scenario {
        name: "point-approx-inequality",
        summary: "averaging bound for the point approximation defect over 20 random draws, n = 1, N = 32",
        json: r#"{
  "scenario": "point-approx-inequality",
  "setup": {"n": 1, "size": 32},
  "family": {"kind": "gaussian-orbit", "radius": 3},
  "diagnostics": ["point-approx", "equicontinuity"],
  "assertions": [
    {"metric": "point-approx.max_excess", "op": "<=", "value": 1e-10}
  ],
  "seed": 11
}"#,
    },
    Scenario {
        name: "operator-counterexample",
        summary: "rank-one family that is collectively compact while its adjoint family is not, n = 1, N = 64",
        json: r#"{
  "scenario": "operator-counterexample",
  "setup": {"n": 1, "size": 64},
  "family": {"kind": "operator-counterexample", "j": [8, 16, 32]},
  "diagnostics": ["operator-tightness", "equicompactness", "weak-norm"],
  "assertions": [
    {"metric": "operator-tightness.plain_final_max", "op": "<=", "value": 1e-8},
    {"metric": "operator-tightness.oracle_gap", "op": "<=", "value": 1e-10},
    {"metric": "operator-tightness.oracle_floor_min", "op": ">=", "value": 0.9}
  ]
}"#,
    },
    Scenario {
        name: "modulated-escape",
        summary: "window modulated to growing frequencies: escape in momentum, n = 1, N = 64",
        json: r#"{
  "scenario": "modulated-escape",
  "setup": {"n": 1, "size": 64},
  "family": {"kind": "modulated", "frequencies": [0, 7, 14, 21, 28]},
  "diagnostics": ["qp-tightness", "uv-modulus", "compactness-proxy"],
  "assertions": [
    {"metric": "qp-tightness.min_psi_term", "op": ">=", "value": 0.5}
  ]
}"#,
    },
];

pub fn find(name: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::validate;

    #[test]
    fn built_ins_parse_and_validate() {
        assert!(SCENARIOS.len() >= 6);
        for s in SCENARIOS {
            let c = s.config();
            assert_eq!(c.scenario, s.name);
            assert!(validate(&c).is_empty(), "{}: {:?}", s.name, validate(&c));
        }
    }
}
