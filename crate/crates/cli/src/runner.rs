//! Pipeline wiring: builds the setup, frame and family of a configuration,
//! evaluates every listed diagnostic and writes CSV tables plus a JSON
//! summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use compactlab::compactness::{
    compactness_proxy, equicompactness_check, equicontinuity_modulus, operator_tightness, pi_cc_tightness,
    point_approx_bound, point_approx_defect, qp_tightness, tightness_profile, uniform_weak_norm_check,
    uv_modulus, OperatorFamily, VectorFamily,
};
use compactlab::container::{read_array, sidecar_path, write_array, write_atomic, write_frame, Array, DType};
use compactlab::families::{
    coherent_orbit, counterexample_basis, escaping_translates, frequency_cutoffs, gaussian_state, modulated,
    operator_counterexample, spatial_cutoffs,
};
use compactlab::frame::{Calibration, Frame};
use compactlab::linalg::{op_norm, random_matrix, random_vector, rank_one};
use compactlab::magweyl::hs::hs_expand;
use compactlab::magweyl::momentum::{commutator_refinement, empirical_orders};
use compactlab::magweyl::opweyl::{gauge_covariance_defect, Symbol};
use compactlab::magweyl::setup::{MagneticSetup, Poly};
use compactlab::magweyl::weyl::{
    cocycle, composition_defect, expected_calibration_constant, weyl_family, weyl_system, PhasePoint,
    SegmentTable,
};
use compactlab::quantizer::PiFamily;
use compactlab::sigma::{SigmaFunction, SolidSpaceSpec};
use compactlab::{CMatrix, CVector, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{validate, Assertion, Diagnostic, ExperimentConfig, FamilyConfig, WindowConfig};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error(transparent)]
    Core(#[from] compactlab::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

/// A CSV table and the scalar metrics of one diagnostic.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticResult {
    pub diagnostic: String,
    pub family: String,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip)]
    pub columns: Vec<&'static str>,
    #[serde(skip)]
    pub rows: Vec<Vec<String>>,
}

impl DiagnosticResult {
    fn new(d: Diagnostic, family: &str, columns: Vec<&'static str>) -> Self {
        Self {
            diagnostic: d.name().to_string(),
            family: family.to_string(),
            metrics: BTreeMap::new(),
            notes: Vec::new(),
            columns,
            rows: Vec::new(),
        }
    }

    fn metric(&mut self, name: &str, v: f64) {
        self.metrics.insert(name.to_string(), v);
    }

    fn flag(&mut self, name: &str, v: bool) {
        self.metric(name, if v { 1.0 } else { 0.0 });
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, Serialize)]
pub struct AssertionOutcome {
    pub metric: String,
    pub op: crate::config::Comparison,
    pub value: f64,
    pub actual: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub family: String,
    pub diagnostics: Vec<DiagnosticResult>,
    pub assertions: Vec<AssertionOutcome>,
    pub passed: bool,
    #[serde(skip)]
    pub artifacts: Artifacts,
}

/// Binary outputs of a run: the frame used by the frame diagnostics and the
/// vector family as columns.
#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub frame: Option<Frame>,
    pub family: Option<CMatrix>,
}

impl Report {
    pub fn failures(&self) -> Vec<String> {
        self.assertions
            .iter()
            .filter(|a| !a.pass)
            .map(|a| match a.actual {
                Some(v) => format!("{} = {v:.6e} violates {} {:e}", a.metric, op_text(a.op), a.value),
                None => format!("{} was not produced", a.metric),
            })
            .collect()
    }
}

fn op_text(op: crate::config::Comparison) -> &'static str {
    match op {
        crate::config::Comparison::AtMost => "<=",
        crate::config::Comparison::AtLeast => ">=",
    }
}

fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn normalized(v: CVector) -> CVector {
    let n = v.norm();
    if n > 0.0 {
        v / Complex64::new(n, 0.0)
    } else {
        v
    }
}

struct Calibrated {
    pi: PiFamily,
    frame: Frame,
    calibration: Calibration,
}

enum Family {
    Vectors(VectorFamily),
    Operators { basis: Vec<CVector>, js: Vec<usize> },
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    setup: MagneticSetup,
    table: SegmentTable,
    spec: SolidSpaceSpec,
    calibrated: Option<Calibrated>,
    family: Family,
}

fn needs_frame(d: Diagnostic) -> bool {
    matches!(
        d,
        Diagnostic::FrameIdentities
            | Diagnostic::QuantizerUnitarity
            | Diagnostic::TightnessProfile
            | Diagnostic::PiCc
            | Diagnostic::Equicontinuity
            | Diagnostic::PointApprox
            | Diagnostic::OperatorTightness
    )
}

impl<'a> Context<'a> {
    fn build(cfg: &'a ExperimentConfig, frame_override: Option<Frame>) -> Result<Self, RunError> {
        let setup = cfg.setup.build()?;
        let table = SegmentTable::new(&setup);
        let WindowConfig::Gaussian { width } = cfg.window;
        let window = gaussian_state(setup.grid(), width)?;
        let p = cfg.solid_space.p.value().map_err(|e| RunError::Config(vec![e]))?;
        let calibrated = if cfg.diagnostics.iter().any(|&d| needs_frame(d)) {
            let raw = weyl_family(&setup, cfg.exhaustion.levels)?;
            let (frame, calibration) = raw.frame(&window)?.calibrate()?;
            let pi = raw.rescaled(1.0 / calibration.constant)?;
            let frame = match frame_override {
                Some(f) if f.dim() != frame.dim() || f.sigma().len() != frame.sigma().len() => {
                    return Err(RunError::Config(vec![format!(
                        "frame: loaded frame has dimension {} over {} points, the setup needs {} over {}",
                        f.dim(),
                        f.sigma().len(),
                        frame.dim(),
                        frame.sigma().len()
                    )]))
                }
                Some(f) => f,
                None => frame,
            };
            Some(Calibrated { pi, frame, calibration })
        } else {
            None
        };
        let weight = match (cfg.solid_space.weight_beta, &calibrated) {
            (Some(beta), Some(c)) => Some(
                c.pi.sigma()
                    .points()
                    .iter()
                    .map(|s| (1.0 + s.iter().map(|v| v * v).sum::<f64>().sqrt()).powf(beta))
                    .collect(),
            ),
            _ => None,
        };
        let spec = SolidSpaceSpec::new(p, weight)?;
        let len = setup.grid().len();
        let family = match &cfg.family {
            FamilyConfig::GaussianOrbit { radius } => Family::Vectors(coherent_orbit(&setup, &window, *radius)?),
            FamilyConfig::EscapingTranslates { count } => {
                Family::Vectors(escaping_translates(&setup, &window, *count)?)
            }
            FamilyConfig::Modulated { frequencies } => Family::Vectors(modulated(setup.grid(), &window, frequencies)?),
            FamilyConfig::RandomStates { count } => {
                let mut rng = rng_for(cfg.seed, 1);
                Family::Vectors(VectorFamily::new(
                    (0..*count).map(|_| normalized(random_vector(&mut rng, len))).collect(),
                )?)
            }
            FamilyConfig::CustomFile { path } => {
                let m = read_array(path)?.into_matrix()?;
                Family::Vectors(VectorFamily::new(m.column_iter().map(|c| c.into_owned()).collect())?)
            }
            FamilyConfig::OperatorCounterexample { j } => {
                let count = j.iter().copied().max().unwrap_or(1);
                Family::Operators { basis: counterexample_basis(&setup, &window, count)?, js: j.clone() }
            }
        };
        Ok(Self { cfg, setup, table, spec, calibrated, family })
    }

    fn calibrated(&self) -> &Calibrated {
        self.calibrated.as_ref().expect("frame built for frame diagnostics")
    }

    fn vectors(&self) -> &VectorFamily {
        match &self.family {
            Family::Vectors(v) => v,
            Family::Operators { .. } => unreachable!("validated: vector diagnostics need a vector family"),
        }
    }

    fn operators(&self) -> (&[CVector], &[usize]) {
        match &self.family {
            Family::Operators { basis, js } => (basis, js),
            Family::Vectors(_) => unreachable!("validated: operator diagnostics need an operator family"),
        }
    }

    fn label(&self) -> &'static str {
        self.cfg.family.label()
    }

    /// Smallest lattice step in phase space.
    fn step(&self) -> f64 {
        let g = self.setup.grid();
        g.h().min(g.dxi())
    }
}

fn frame_identities(ctx: &Context) -> Result<DiagnosticResult, RunError> {
    let c = ctx.calibrated();
    let mut r = DiagnosticResult::new(Diagnostic::FrameIdentities, ctx.label(), vec!["quantity", "value"]);
    let g = ctx.setup.grid();
    let expected = expected_calibration_constant(g);
    let sigma = c.frame.sigma();
    let mut rng = rng_for(ctx.cfg.seed, 11);
    let mut isometry = 0.0f64;
    for _ in 0..100 {
        let u = random_vector(&mut rng, g.len());
        let f = c.frame.analysis(&u)?;
        let n = f.norm_l2(sigma)?;
        isometry = isometry.max((n * n - u.norm_squared()).abs() / u.norm_squared());
    }
    let dense_kernel = sigma.len() <= 4096;
    let gram = dense_kernel.then(|| c.frame.gramian());
    let mut reproducing = 0.0f64;
    let mut reconstruction = 0.0f64;
    for _ in 0..20 {
        let u = random_vector(&mut rng, g.len());
        let f = c.frame.analysis(&u)?;
        let pf = match &gram {
            Some(k) => k.apply(&f)?,
            None => c.frame.project(&f)?,
        };
        let fnorm = f.norm_l2(sigma)?;
        let diff = SigmaFunction::new(pf.values() - f.values()).norm_l2(sigma)?;
        reproducing = reproducing.max(diff / fnorm);
        reconstruction = reconstruction.max((c.frame.synthesis(&f)? - &u).norm() / u.norm());
    }
    let values = [
        ("calibration_constant", c.calibration.constant),
        ("expected_constant", expected),
        ("calibration_relative_error", (c.calibration.constant - expected).abs() / expected),
        ("calibration_deviation", c.calibration.relative_deviation),
        ("resolution_residual", c.frame.tightness_residual()),
        ("analysis_isometry", isometry),
        ("reproducing_residual", reproducing),
        ("reconstruction_residual", reconstruction),
    ];
    for (k, v) in values {
        r.metric(k, v);
        r.row(vec![k.to_string(), num(v)]);
    }
    if !dense_kernel {
        r.notes.push("reproducing formula evaluated through synthesis and analysis".into());
    }
    Ok(r)
}

fn quantizer_unitarity(ctx: &Context) -> Result<DiagnosticResult, RunError> {
    let pi = &ctx.calibrated().pi;
    let d = pi.dim();
    let mut r = DiagnosticResult::new(Diagnostic::QuantizerUnitarity, ctx.label(), vec!["pair", "relative_hs_residual"]);
    let mut rng = rng_for(ctx.cfg.seed, 12);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let u = random_vector(&mut rng, d);
        let v = random_vector(&mut rng, d);
        let t = pi.quantize(&pi.coefficient_transform(&u, &v)?)?;
        let res = (t - rank_one(&u, &v)).norm() / (u.norm() * v.norm());
        worst = worst.max(res);
        r.row(vec![i.to_string(), num(res)]);
    }
    r.metric("hs_residual", worst);
    if pi.len() >= d * d && d * d <= 4096 {
        let s = pi.surjectivity()?;
        r.metric("surjectivity_defect", s.defect);
        r.metric("surjectivity_rank", s.rank as f64);
        r.metric("hs_dim", s.hs_dim as f64);
    } else {
        r.notes.push("surjectivity skipped: Hilbert-Schmidt space too large for a dense check".into());
    }
    Ok(r)
}

fn random_phase_point<R: Rng>(rng: &mut R, n: usize, xmax: i64, ximax: i64) -> PhasePoint {
    let mut x = [0i64; 2];
    let mut xi = [0i64; 2];
    for j in 0..n {
        x[j] = rng.gen_range(-xmax..=xmax);
        xi[j] = rng.gen_range(-ximax..=ximax);
    }
    PhasePoint::new(x, xi)
}

fn weyl_calculus(ctx: &Context) -> Result<DiagnosticResult, RunError> {
    let s = &ctx.setup;
    let g = s.grid();
    let n = g.n();
    let size = g.size() as i64;
    let mut r = DiagnosticResult::new(Diagnostic::WeylCalculus, ctx.label(), vec!["quantity", "value"]);
    let mut rng = rng_for(ctx.cfg.seed, 13);
    let mut unitarity = 0.0f64;
    for _ in 0..50 {
        let p = random_phase_point(&mut rng, n, size - 1, size - 1);
        let u = random_vector(&mut rng, g.len());
        unitarity = unitarity.max((weyl_system(s, &p)?.apply(&u).norm() - u.norm()).abs() / u.norm());
    }
    // states supported in the central half, shifts of at most size/8
    let central = |k: usize| {
        let m = g.multi(k);
        (0..n).all(|j| (m[j] as i64 - size / 2).abs() < size / 4)
    };
    let mut composition = 0.0f64;
    let mut support_ok = true;
    for _ in 0..10 {
        let a = random_phase_point(&mut rng, n, size / 8, size / 4);
        let b = random_phase_point(&mut rng, n, size / 8, size / 4);
        let u: CVector = CVector::from_fn(g.len(), |k, _| {
            if central(k) {
                Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let rep = composition_defect(s, &a, &b, &[u])?;
        composition = composition.max(rep.defect);
        support_ok &= rep.support_ok;
    }
    let zero = MagneticSetup::zero_field(g.clone())?;
    let mut cocycle_gap = 0.0f64;
    for _ in 0..20 {
        let a = random_phase_point(&mut rng, n, size / 2, size / 2);
        let b = random_phase_point(&mut rng, n, size / 2, size / 2);
        let z = g.point(rng.gen_range(0..g.len()));
        let (x, xi) = a.coords(g);
        let (y, eta) = b.coords(g);
        let symplectic = Complex64::from_polar(1.0, 0.5 * (g.dot(&y, &xi) - g.dot(&x, &eta)));
        cocycle_gap = cocycle_gap.max((cocycle(&zero, &a, &b, &z) - symplectic).norm());
    }
    let symbol = Symbol::from_fn(g, |x, xi| {
        let r2: f64 = x[..n].iter().chain(&xi[..n]).map(|v| v * v).sum();
        Complex64::new((-r2 / 2.0).exp(), 0.0)
    });
    let linear = (0..n).fold(Poly::zero(), |p, j| p.add(&Poly::linear(j, 0.3 - 0.1 * j as f64)));
    let quadratic = if n == 2 {
        Poly::term(0.1, &[2]).add(&Poly::term(0.05, &[1, 1]))
    } else {
        Poly::term(0.1, &[2])
    };
    let values = [
        ("unitarity", unitarity),
        ("composition_residual", composition),
        ("composition_support_ok", if support_ok { 1.0 } else { 0.0 }),
        ("cocycle_zero_field", cocycle_gap),
        ("gauge_linear", gauge_covariance_defect(s, &symbol, &linear)?),
        ("gauge_quadratic", gauge_covariance_defect(s, &symbol, &quadratic)?),
    ];
    for (k, v) in values {
        r.metric(k, v);
        r.row(vec![k.to_string(), num(v)]);
    }
    Ok(r)
}

fn commutator(ctx: &Context) -> Result<DiagnosticResult, RunError> {
    let mut r = DiagnosticResult::new(Diagnostic::CommutatorRefinement, ctx.label(), vec!["size", "defect", "order"]);
    let study = commutator_refinement(&ctx.cfg.setup.field, &[16, 32, 64], 1.0)?;
    let orders = empirical_orders(&study);
    for (i, (n, d)) in study.iter().enumerate() {
        let order = if i == 0 { String::new() } else { num(orders[i - 1]) };
        r.row(vec![n.to_string(), num(*d), order]);
        r.metric(&format!("defect_{n}"), *d);
    }
    r.metric("min_order", orders.iter().copied().fold(f64::INFINITY, f64::min));
    r.flag("decreasing", study.windows(2).all(|w| w[1].1 < w[0].1));
    Ok(r)
}

fn hs_expansion(ctx: &Context) -> Result<DiagnosticResult, RunError> {
    let s = &ctx.setup;
    let g = s.grid();
    let len = g.len();
    let mut r = DiagnosticResult::new(Diagnostic::HsExpansion, ctx.label(), vec!["operator", "m", "residual"]);
    let mut rng = rng_for(ctx.cfg.seed, 14);
    let k = random_matrix(&mut rng, len, len);
    let full = hs_expand(s, &ctx.table, &k, len)?;
    r.row(vec!["random".into(), len.to_string(), num(full.relative_residual)]);
    r.metric("full_relative_residual", full.relative_residual);
    let cell = g.cell();
    let smooth = CMatrix::from_fn(len, len, |a, b| {
        let (x, y) = (g.point(a), g.point(b));
        let d: f64 = (0..g.n()).map(|j| (x[j] - y[j]).powi(2)).sum();
        let e: f64 = (0..g.n()).map(|j| x[j] * x[j] + y[j] * y[j]).sum();
        Complex64::new((-e / 2.0 - d).exp() * cell, 0.0)
    });
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    for m in [4usize, 8, 16].into_iter().filter(|&m| m <= len) {
        let res = hs_expand(s, &ctx.table, &smooth, m)?.residual;
        monotone &= res < prev;
        prev = res;
        r.row(vec!["smoothing".into(), m.to_string(), num(res)]);
        r.metric(&format!("smoothing_residual_{m}"), res);
    }
    r.flag("monotone", monotone);
    Ok(r)
}

fn tightness(ctx: &Context) -> Result<DiagnosticResult, RunError> {
    let c = ctx.calibrated();
    let om = ctx.vectors();
    let mut r = DiagnosticResult::new(Diagnostic::TightnessProfile, ctx.label(), vec!["level", "size", "value"]);
    let p = tightness_profile(om, &c.frame, &ctx.spec)?;
    for (k, (size, v)) in p.level_sizes.iter().zip(&p.values).enumerate() {
        r.row(vec![k.to_string(), size.to_string(), num(*v)]);
    }
    let mut max_norm = 0.0f64;
    for u in om.members() {
        let f = c.frame.analysis(u)?;
        max_norm = max_norm.max(compactlab::sigma::solid_norm(&f, &ctx.spec, c.frame.sigma())?);
    }
    r.metric("final_nontrivial", p.final_nontrivial());
    r.metric("final", *p.values.last().unwrap_or(&0.0));
    r.metric("max_coefficient_norm", max_norm);
    r.metric("floor_ratio", if max_norm > 0.0 { p.final_nontrivial() / max_norm } else { 0.0 });
    r.flag("nonincreasing", p.is_nonincreasing());
    Ok(r)
}

fn pi_cc(ctx: &Context) -> Result<DiagnosticResult, RunError> {
    let pi = &ctx.calibrated().pi;
    let om = ctx.vectors();
    let mut r = DiagnosticResult::new(Diagnostic::PiCc, ctx.label(), vec!["level", "value"]);
    let k = pi.sigma().level_count();
    let mut values = Vec::with_capacity(k);
    for level in 0..k {
        let v = pi_cc_tightness(om, pi, level)?;
        r.row(vec![level.to_string(), num(v)]);
        values.push(v);
    }
    r.metric("largest_proper", if k >= 2 { values[k - 2] } else { values[0] });
    r.metric("full", values[k - 1]);
    r.metric("min_proper", values[..k.saturating_sub(1).max(1)].iter().copied().fold(f64::INFINITY, f64::min));
    Ok(r)
}

fn equicontinuity(ctx: &Context) -> Result<DiagnosticResult, RunError> {
    let pi = &ctx.calibrated().pi;
    let om = ctx.vectors();
    let step = ctx.step();
    let radii: Vec<f64> = [0.0, 1.0, 2.0, 4.0, 8.0].iter().map(|k| k * step).collect();
    let s0 = pi.identity_index().unwrap_or(0);
    let w = equicontinuity_modulus(om, pi, s0, &radii)?;
    let mut r = DiagnosticResult::new(Diagnostic::Equicontinuity, ctx.label(), vec!["radius", "value"]);
    for (rad, v) in radii.iter().zip(&w) {
        r.row(vec![num(*rad), num(*v)]);
    }
    r.metric("one_step", w[1]);
    r.metric("max", w.iter().copied().fold(0.0, f64::max));
    Ok(r)
}

fn point_approx(ctx: &Context) -> Result<DiagnosticResult, RunError> {
    let pi = &ctx.calibrated().pi;
    let om = ctx.vectors();
    let sigma = pi.sigma();
    let step = ctx.step();
    let mut rng = rng_for(ctx.cfg.seed, 15);
    let mut r = DiagnosticResult::new(
        Diagnostic::PointApprox,
        ctx.label(),
        vec!["draw", "s0", "radius", "defect", "bound"],
    );
    let near: Vec<usize> = (0..sigma.len())
        .filter(|&j| sigma.point(j).iter().map(|v| v * v).sum::<f64>().sqrt() <= 3.0 * step + 1e-12)
        .collect();
    let mut excess = f64::NEG_INFINITY;
    for draw in 0..20 {
        let s0 = near[rng.gen_range(0..near.len())];
        let radius = step * rng.gen_range(1..=3) as f64;
        let mut g = vec![0.0; sigma.len()];
        let mut mass = 0.0;
        for (j, gj) in g.iter_mut().enumerate() {
            if sigma.distance(j, s0) <= radius + 1e-12 {
                *gj = rng.gen::<f64>() + 0.01;
                mass += *gj * sigma.weights()[j];
            }
        }
        for gj in g.iter_mut() {
            *gj /= mass;
        }
        let g = SigmaFunction::from_real(&g);
        let defect = point_approx_defect(om, pi, s0, &g)?;
        let bound = point_approx_bound(om, pi, s0, &g)?;
        excess = excess.max(defect - bound);
        r.row(vec![draw.to_string(), s0.to_string(), num(radius), num(defect), num(bound)]);
    }
    r.metric("max_excess", excess);
    Ok(r)
}

fn uv(ctx: &Context) -> Result<DiagnosticResult, RunError> {
    let g = ctx.setup.grid();
    let om = ctx.vectors();
    let mut radii: Vec<f64> = [0.0, 1.0, 2.0, 4.0]
        .iter()
        .flat_map(|k| [k * g.h(), k * g.dxi()])
        .collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let m = uv_modulus(om, &ctx.setup, &radii)?;
    let mut r = DiagnosticResult::new(Diagnostic::UvModulus, ctx.label(), vec!["radius", "translation", "modulation"]);
    for i in 0..radii.len() {
        r.row(vec![num(radii[i]), num(m.translation[i]), num(m.modulation[i])]);
    }
    let at = |target: f64| radii.iter().position(|&x| x == target).expect("radius listed");
    r.metric("translation_one_step", m.translation[at(g.h())]);
    r.metric("modulation_one_step", m.modulation[at(g.dxi())]);
    Ok(r)
}

fn qp(ctx: &Context) -> Result<DiagnosticResult, RunError> {
    let g = ctx.setup.grid();
    let om = ctx.vectors();
    let mut r = DiagnosticResult::new(
        Diagnostic::QpTightness,
        ctx.label(),
        vec!["cutoff", "phi_term", "psi_term", "value"],
    );
    let mut min_phi = f64::INFINITY;
    let mut min_psi = f64::INFINITY;
    let mut max_value = 0.0f64;
    for ((name, phi), (_, psi_hat)) in spatial_cutoffs(g).into_iter().zip(frequency_cutoffs(g)) {
        let q = qp_tightness(om, &ctx.setup, &ctx.table, &phi, &psi_hat)?;
        min_phi = min_phi.min(q.phi_term);
        min_psi = min_psi.min(q.psi_term);
        max_value = max_value.max(q.value);
        r.row(vec![name.to_string(), num(q.phi_term), num(q.psi_term), num(q.value)]);
    }
    r.metric("min_phi_term", min_phi);
    r.metric("min_psi_term", min_psi);
    r.metric("max_value", max_value);
    Ok(r)
}

fn proxy(ctx: &Context) -> Result<DiagnosticResult, RunError> {
    let sv = compactness_proxy(ctx.vectors().members())?;
    let mut r = DiagnosticResult::new(Diagnostic::CompactnessProxy, ctx.label(), vec!["index", "value"]);
    for (i, v) in sv.iter().enumerate() {
        r.row(vec![i.to_string(), num(*v)]);
    }
    r.metric("count_above_1e-6", sv.iter().filter(|&&v| v > 1e-6).count() as f64);
    r.metric("tail", *sv.last().unwrap_or(&0.0));
    Ok(r)
}

/// `max_S ||chi_{L^c} phi_W S||` by a full SVD of the composed matrix.
fn dense_level_norm(frame: &Frame, members: &[CMatrix], level: usize) -> Result<f64, RunError> {
    let sigma = frame.sigma();
    let inside = sigma.level_mask(level)?;
    let mut a = frame.windows().adjoint();
    for (j, &is_in) in inside.iter().enumerate() {
        let w = if is_in { 0.0 } else { sigma.weights()[j].sqrt() };
        a.row_mut(j).scale_mut(w);
    }
    Ok(members.iter().map(|m| op_norm(&(&a * m))).fold(0.0, f64::max))
}

fn op_tightness(ctx: &Context) -> Result<DiagnosticResult, RunError> {
    let frame = &ctx.calibrated().frame;
    let (basis, js) = ctx.operators();
    let mut r = DiagnosticResult::new(
        Diagnostic::OperatorTightness,
        ctx.label(),
        vec!["j", "level", "plain", "with_adjoints"],
    );
    let mut plain_max = 0.0f64;
    let mut floor_min = f64::INFINITY;
    let mut oracle_min = f64::INFINITY;
    let mut oracle_gap = 0.0f64;
    for &j in js {
        let plain = operator_tightness(&operator_counterexample(basis, j, false)?, frame)?;
        let adj_family = operator_counterexample(basis, j, true)?;
        let adj = operator_tightness(&adj_family, frame)?;
        for k in 0..plain.values.len() {
            r.row(vec![j.to_string(), k.to_string(), num(plain.values[k]), num(adj.values[k])]);
        }
        let last_proper = frame.sigma().level_count().saturating_sub(2);
        let oracle = dense_level_norm(frame, &adj_family.effective_members(), last_proper)?;
        plain_max = plain_max.max(plain.final_nontrivial());
        floor_min = floor_min.min(adj.final_nontrivial());
        oracle_min = oracle_min.min(oracle);
        oracle_gap = oracle_gap.max((adj.final_nontrivial() - oracle).abs());
        r.metric(&format!("plain_final_{j}"), plain.final_nontrivial());
        r.metric(&format!("adjoint_floor_{j}"), adj.final_nontrivial());
    }
    r.metric("plain_final_max", plain_max);
    r.metric("adjoint_floor_min", floor_min);
    r.metric("oracle_floor_min", oracle_min);
    r.metric("oracle_gap", oracle_gap);
    Ok(r)
}

fn equicompactness(ctx: &Context) -> Result<DiagnosticResult, RunError> {
    let (basis, js) = ctx.operators();
    let j = js.iter().copied().max().unwrap_or(1);
    let d = basis[0].len();
    let mut rng = rng_for(ctx.cfg.seed, 16);
    let mut samples: Vec<CVector> = (0..50).map(|_| random_vector(&mut rng, d)).collect();
    samples.extend(basis[..j].iter().cloned());
    let plain = operator_counterexample(basis, j, false)?;
    let adjoint = OperatorFamily::new((0..j).map(|i| rank_one(&basis[i], &basis[0])).collect(), false)?;
    let decaying: Vec<CVector> = (0..j).map(|n| &basis[n] * Complex64::new(0.5f64.powi(n as i32), 0.0)).collect();
    let mut r = DiagnosticResult::new(Diagnostic::Equicompactness, ctx.label(), vec!["family", "functionals", "dominated", "margin"]);
    let cases = [
        ("plain", "svd", equicompactness_check(&plain, None, &samples)?),
        ("adjoint", "svd", equicompactness_check(&adjoint, None, &samples)?),
        ("plain", "decaying", equicompactness_check(&plain, Some(&decaying), &basis[..j])?),
        ("adjoint", "decaying", equicompactness_check(&adjoint, Some(&decaying), &basis[..j])?),
    ];
    for (fam, func, rep) in cases {
        r.row(vec![fam.into(), func.into(), (rep.dominated as u8).to_string(), num(rep.margin)]);
        r.flag(&format!("{fam}_{func}_dominated"), rep.dominated);
        r.metric(&format!("{fam}_{func}_margin"), rep.margin);
    }
    Ok(r)
}

fn weak_norm(ctx: &Context) -> Result<DiagnosticResult, RunError> {
    let (basis, js) = ctx.operators();
    let j = js.iter().copied().max().unwrap_or(1);
    let plain = operator_counterexample(basis, j, false)?;
    let adjoint = OperatorFamily::new((0..j).map(|i| rank_one(&basis[i], &basis[0])).collect(), false)?;
    let a = uniform_weak_norm_check(&plain, &basis[..j])?;
    let b = uniform_weak_norm_check(&adjoint, &basis[..j])?;
    let mut r = DiagnosticResult::new(Diagnostic::WeakNorm, ctx.label(), vec!["n", "plain", "adjoint"]);
    for n in 0..j {
        r.row(vec![n.to_string(), num(a[n]), num(b[n])]);
    }
    r.metric("plain_min", a.iter().copied().fold(f64::INFINITY, f64::min));
    r.metric("adjoint_last", *b.last().unwrap_or(&0.0));
    Ok(r)
}

fn evaluate(ctx: &Context, d: Diagnostic) -> Result<DiagnosticResult, RunError> {
    match d {
        Diagnostic::FrameIdentities => frame_identities(ctx),
        Diagnostic::QuantizerUnitarity => quantizer_unitarity(ctx),
        Diagnostic::WeylCalculus => weyl_calculus(ctx),
        Diagnostic::CommutatorRefinement => commutator(ctx),
        Diagnostic::HsExpansion => hs_expansion(ctx),
        Diagnostic::TightnessProfile => tightness(ctx),
        Diagnostic::PiCc => pi_cc(ctx),
        Diagnostic::Equicontinuity => equicontinuity(ctx),
        Diagnostic::PointApprox => point_approx(ctx),
        Diagnostic::UvModulus => uv(ctx),
        Diagnostic::QpTightness => qp(ctx),
        Diagnostic::CompactnessProxy => proxy(ctx),
        Diagnostic::OperatorTightness => op_tightness(ctx),
        Diagnostic::Equicompactness => equicompactness(ctx),
        Diagnostic::WeakNorm => weak_norm(ctx),
    }
}

fn check(assertions: &[Assertion], results: &[DiagnosticResult]) -> Vec<AssertionOutcome> {
    assertions
        .iter()
        .map(|a| {
            let actual = a.metric.split_once('.').and_then(|(d, m)| {
                results.iter().find(|r| r.diagnostic == d).and_then(|r| r.metrics.get(m).copied())
            });
            AssertionOutcome {
                metric: a.metric.clone(),
                op: a.op,
                value: a.value,
                actual,
                pass: actual.is_some_and(|v| a.holds(v)),
            }
        })
        .collect()
}

/// Evaluates the configuration without writing anything.
pub fn evaluate_config(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    evaluate_with_frame(cfg, None)
}

/// As [`evaluate_config`], with the frame diagnostics run on `frame`
/// instead of the calibrated Weyl frame of the setup.
pub fn evaluate_with_frame(cfg: &ExperimentConfig, frame: Option<Frame>) -> Result<Report, RunError> {
    let problems = validate(cfg);
    if !problems.is_empty() {
        return Err(RunError::Config(problems));
    }
    let ctx = Context::build(cfg, frame)?;
    let results = cfg
        .diagnostics
        .iter()
        .map(|&d| evaluate(&ctx, d))
        .collect::<Result<Vec<_>, _>>()?;
    let assertions = check(&cfg.assertions, &results);
    let passed = assertions.iter().all(|a| a.pass);
    Ok(Report {
        scenario: cfg.scenario.clone(),
        seed: cfg.seed,
        family: cfg.family.label().to_string(),
        diagnostics: results,
        assertions,
        passed,
        artifacts: Artifacts {
            frame: ctx.calibrated.map(|c| c.frame),
            family: match ctx.family {
                Family::Vectors(v) => Some(v.as_matrix()),
                Family::Operators { .. } => None,
            },
        },
    })
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> RunError {
    let context = context.into();
    move |source| RunError::Io { context, source }
}

/// Writes `<diagnostic>.csv` per diagnostic and `summary.json`.
pub fn write_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
    let mut written = Vec::new();
    for d in &report.diagnostics {
        let path = dir.join(format!("{}.csv", d.diagnostic));
        write_atomic(&path, d.csv().as_bytes())?;
        written.push(path);
    }
    if let Some(frame) = &report.artifacts.frame {
        let path = dir.join("frame.clab");
        write_frame(&path, frame, DType::Complex128)?;
        written.push(sidecar_path(&path));
        written.push(path);
    }
    if let Some(members) = &report.artifacts.family {
        let path = dir.join("family.clab");
        write_array(&path, &Array::from_matrix(members), DType::Complex64)?;
        written.push(path);
    }
    let mut summary = serde_json::to_string_pretty(report).expect("report serializes");
    summary.push('\n');
    let path = dir.join("summary.json");
    write_atomic(&path, summary.as_bytes())?;
    written.push(path);
    Ok(written)
}

pub fn run(cfg: &ExperimentConfig, frame: Option<Frame>) -> Result<Report, RunError> {
    let report = evaluate_with_frame(cfg, frame)?;
    write_report(&report, &cfg.output_dir)?;
    Ok(report)
}

/// One line per diagnostic metric, for terminal output.
pub fn render(report: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario {} (family {}, seed {})", report.scenario, report.family, report.seed);
    for d in &report.diagnostics {
        for (k, v) in &d.metrics {
            let _ = writeln!(s, "  {}.{k} = {v:.6e}", d.diagnostic);
        }
        for n in &d.notes {
            let _ = writeln!(s, "  {}: {n}", d.diagnostic);
        }
    }
    for a in &report.assertions {
        let status = if a.pass { "PASS" } else { "FAIL" };
        let actual = a.actual.map_or("missing".to_string(), |v| format!("{v:.6e}"));
        let _ = writeln!(s, "  [{status}] {} {} {:e} (actual {actual})", a.metric, op_text(a.op), a.value);
    }
    s
}
