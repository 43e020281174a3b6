//! Exact time evolution by per-block diagonalization, expectation series and
//! the parity experiment.

use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::decoupling::{build_v, TransformParams};
use crate::hilbert::{ConservedQuantity, HilbertSpec, Ket, Spin};
use crate::linalg::Spectral;
use crate::models::{build_quadratic_hamiltonian, build_transformed_target, ModelParams};
use crate::operator::OperatorMatrix;
use crate::{par, Error, Result, C64};

/// Normalization accepted for an initial state.
pub const NORM_TOL: f64 = 1e-12;

/// Column order of trajectory CSV files.
pub const CSV_COLUMNS: [&str; 6] = ["t", "n1_mean", "n2_mean", "sz_mean", "norm_err", "excitation"];

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    space: Arc<HilbertSpec>,
    amplitudes: DVector<C64>,
}

impl QuantumState {
    pub fn new(space: &Arc<HilbertSpec>, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(QuantumState {
            space: Arc::clone(space),
            amplitudes,
        })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(space: &Arc<HilbertSpec>, amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Self::new(space, amplitudes.unscale(norm))
    }

    pub fn space(&self) -> &Arc<HilbertSpec> {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> C64 {
        op.expectation(&self.amplitudes)
    }
}

/// Unit vector |n₁, n₂, σ⟩.
pub fn fock_state(space: &Arc<HilbertSpec>, n1: usize, n2: usize, spin: Spin) -> Result<QuantumState> {
    let ket = Ket::new(n1, n2, spin);
    let index = space.index_of(&ket).ok_or(Error::OutOfTruncation {
        n1,
        n2,
        spin: spin.symbol(),
        n_max: space.n_max(),
    })?;
    let mut amps = DVector::zeros(space.dim());
    amps[index] = C64::from(1.0);
    QuantumState::new(space, amps)
}

/// Mode 1 in the coherent state |α⟩ truncated at N_max and renormalized,
/// mode 2 in vacuum, atom in |−⟩.
pub fn coherent_state(space: &Arc<HilbertSpec>, alpha: C64) -> Result<QuantumState> {
    let mut amps = DVector::zeros(space.dim());
    let mut term = C64::from(1.0);
    for n in 0..=space.n_max() {
        if n > 0 {
            term *= alpha / (n as f64).sqrt();
        }
        let i = space
            .index_of(&Ket::new(n, 0, Spin::Down))
            .expect("mode-1 ladder lies inside the truncation");
        amps[i] = term;
    }
    QuantumState::normalized(space, amps)
}

/// Amplitudes with independent uniform real and imaginary parts, normalized.
pub fn random_state<R: Rng>(space: &Arc<HilbertSpec>, rng: &mut R) -> QuantumState {
    let amps = DVector::from_fn(space.dim(), |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    QuantumState::normalized(space, amps).expect("random vector is nonzero")
}

/// Observables of one state, all diagonal in the Fock basis.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Sample {
    n1: f64,
    n2: f64,
    sz: f64,
    norm_err: f64,
    excitation: f64,
}

fn sample(space: &HilbertSpec, psi: &DVector<C64>) -> Sample {
    let mut s = Sample::default();
    let mut norm2 = 0.0;
    for (k, z) in space.kets().iter().zip(psi.iter()) {
        let p = z.norm_sqr();
        norm2 += p;
        s.n1 += p * k.n1 as f64;
        s.n2 += p * k.n2 as f64;
        s.sz += p * k.spin.sz();
    }
    s.norm_err = (norm2.sqrt() - 1.0).abs();
    s.excitation = s.n1 + s.n2 + 2.0 * (s.sz + 0.5 * norm2);
    s
}

/// Sampled evolution: time-ordered expectation series and, optionally, the
/// states themselves.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub n1_mean: Vec<f64>,
    pub n2_mean: Vec<f64>,
    pub sz_mean: Vec<f64>,
    pub norm_err: Vec<f64>,
    /// ⟨n₁ + n₂ + 2(S_z + ½)⟩.
    pub excitation: Vec<f64>,
    /// ⟨H⟩ for the generating Hamiltonian.
    pub energy: Vec<f64>,
    pub states: Option<Vec<DVector<C64>>>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with one `# key = value` comment line per header entry.
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[(String, String)]) -> io::Result<()> {
        for (k, v) in header {
            writeln!(w, "# {k} = {v}")?;
        }
        writeln!(w, "{}", CSV_COLUMNS.join(","))?;
        for i in 0..self.len() {
            let row = [
                self.times[i],
                self.n1_mean[i],
                self.n2_mean[i],
                self.sz_mean[i],
                self.norm_err[i],
                self.excitation[i],
            ];
            writeln!(w, "{}", row.map(format_float).join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self, header: &[(String, String)]) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, header).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Largest deviation of the excitation series from its initial value.
    pub fn excitation_drift(&self) -> f64 {
        drift(&self.excitation)
    }

    pub fn energy_drift(&self) -> f64 {
        drift(&self.energy)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    serde_json::Number::from_f64(x).map_or_else(|| x.to_string(), |n| n.to_string())
}

fn drift(series: &[f64]) -> f64 {
    let Some(&first) = series.first() else { return 0.0 };
    series.iter().fold(0.0, |acc, x| acc.max((x - first).abs()))
}

/// k·t_max/n_steps for k = 0..=n_steps; a single t = 0 when t_max = 0.
pub fn time_grid(t_max: f64, n_steps: usize) -> Result<Vec<f64>> {
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_max must be finite and ≥ 0, got {t_max}"
        )));
    }
    if t_max == 0.0 {
        return Ok(vec![0.0]);
    }
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be positive".into()));
    }
    Ok((0..=n_steps).map(|k| t_max * k as f64 / n_steps as f64).collect())
}

/// e^{−iHt} for all t from one diagonalization.
#[derive(Clone, Debug)]
pub struct Propagator {
    hamiltonian: OperatorMatrix,
    spectral: Spectral,
}

/// Initial state in the eigenbasis of each populated block.
struct Projection {
    parts: Vec<(usize, DVector<C64>)>,
}

impl Propagator {
    pub fn new(h: &OperatorMatrix) -> Result<Self> {
        Ok(Propagator {
            hamiltonian: h.clone(),
            spectral: Spectral::of(h)?,
        })
    }

    pub fn space(&self) -> &Arc<HilbertSpec> {
        &self.spectral.space
    }

    /// Grading the Hamiltonian was diagonalized in.
    pub fn quantity(&self) -> ConservedQuantity {
        self.spectral.decomposition.quantity
    }

    fn project(&self, psi: &DVector<C64>) -> Projection {
        let parts = self
            .spectral
            .decomposition
            .blocks
            .iter()
            .zip(&self.spectral.blocks)
            .enumerate()
            .filter_map(|(b, (block, spec))| {
                let local = DVector::from_iterator(block.len(), block.indices.iter().map(|&i| psi[i]));
                (local.iter().any(|z| *z != C64::from(0.0))).then(|| (b, spec.vectors.adjoint() * local))
            })
            .collect();
        Projection { parts }
    }

    fn state(&self, proj: &Projection, t: f64) -> DVector<C64> {
        let mut out = DVector::zeros(self.space().dim());
        for (b, coeffs) in &proj.parts {
            let spec = &self.spectral.blocks[*b];
            let phased = DVector::from_iterator(
                coeffs.len(),
                coeffs
                    .iter()
                    .zip(spec.values.iter())
                    .map(|(c, &e)| c * C64::from_polar(1.0, -e * t)),
            );
            let local = &spec.vectors * phased;
            for (&i, z) in self.spectral.decomposition.blocks[*b].indices.iter().zip(local.iter()) {
                out[i] = *z;
            }
        }
        out
    }

    fn check(&self, psi0: &QuantumState) -> Result<()> {
        if psi0.space().as_ref() != self.space().as_ref() {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    /// ψ(t) = e^{−iHt}ψ₀.
    pub fn state_at(&self, psi0: &QuantumState, t: f64) -> Result<DVector<C64>> {
        self.check(psi0)?;
        Ok(self.state(&self.project(psi0.amplitudes()), t))
    }

    /// Expectation series at every time, states kept on request.
    pub fn trajectory(&self, psi0: &QuantumState, times: &[f64], keep_states: bool) -> Result<TrajectoryRecord> {
        self.check(psi0)?;
        let proj = self.project(psi0.amplitudes());
        let rows = par::map(times, |&t| {
            let psi = self.state(&proj, t);
            let s = sample(self.space(), &psi);
            let e = self.hamiltonian.expectation(&psi).re;
            (s, e, keep_states.then_some(psi))
        });
        let mut rec = TrajectoryRecord {
            times: times.to_vec(),
            states: keep_states.then(Vec::new),
            ..TrajectoryRecord::default()
        };
        for (s, e, psi) in rows {
            rec.n1_mean.push(s.n1);
            rec.n2_mean.push(s.n2);
            rec.sz_mean.push(s.sz);
            rec.norm_err.push(s.norm_err);
            rec.excitation.push(s.excitation);
            rec.energy.push(e);
            if let (Some(states), Some(psi)) = (rec.states.as_mut(), psi) {
                states.push(psi);
            }
        }
        Ok(rec)
    }
}

/// Evolution of `psi0` under hermitian `h`, states included.
pub fn evolve(h: &OperatorMatrix, psi0: &QuantumState, times: &[f64]) -> Result<TrajectoryRecord> {
    Propagator::new(h)?.trajectory(psi0, times, true)
}

/// ψ(t) = V e^{−iH_T t} V†ψ₀ with H_T the decoupled form and V the 45°
/// decoupling unitary.
pub fn frame_evolve_oracle(p: &ModelParams, psi0: &QuantumState, times: &[f64]) -> Result<TrajectoryRecord> {
    let space = psi0.space();
    let target = build_transformed_target(space, p)?;
    let v = build_v(space, &TransformParams::decoupling())?;
    let phi0 = QuantumState::normalized(space, v.adjoint().apply(psi0.amplitudes()))?;
    let inner = Propagator::new(&target)?.trajectory(&phi0, times, true)?;
    let h = build_quadratic_hamiltonian(space, p)?;
    let states: Vec<DVector<C64>> = inner
        .states
        .as_ref()
        .expect("kept")
        .iter()
        .map(|phi| v.apply(phi))
        .collect();
    let mut rec = TrajectoryRecord {
        times: times.to_vec(),
        ..TrajectoryRecord::default()
    };
    for psi in &states {
        let s = sample(space, psi);
        rec.n1_mean.push(s.n1);
        rec.n2_mean.push(s.n2);
        rec.sz_mean.push(s.sz);
        rec.norm_err.push(s.norm_err);
        rec.excitation.push(s.excitation);
        rec.energy.push(h.expectation(psi).re);
    }
    rec.states = Some(states);
    Ok(rec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    /// The initially empty mode ends up holding the photons.
    Inversion,
    /// The initially filled mode recovers them.
    Return,
    Undetermined,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Inversion => "INVERSION",
            Classification::Return => "RETURN",
            Classification::Undetermined => "UNDETERMINED",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParitySignature {
    pub n0: usize,
    pub classification: Classification,
    pub plateau_detected: bool,
    /// First time both modes hold n₀/2 within the band.
    pub collapse_time: Option<f64>,
    /// Time spent in the band between collapse and event.
    pub plateau_duration: f64,
    pub event_time: Option<f64>,
    pub t_max: f64,
}

/// Heuristic thresholds of the parity classifier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParityDetector {
    /// Relative half-width of the band around n₀/2.
    pub band: f64,
    /// Fraction of n₀ a mode must reach for an event.
    pub event_fraction: f64,
    /// Minimal plateau length relative to the event time.
    pub plateau_fraction: f64,
}

impl Default for ParityDetector {
    fn default() -> Self {
        ParityDetector {
            band: 0.15,
            event_fraction: 0.8,
            plateau_fraction: 0.1,
        }
    }
}

impl ParityDetector {
    pub fn classify(&self, n0: usize, rec: &TrajectoryRecord) -> ParitySignature {
        let n = n0 as f64;
        let in_band = |k: usize| {
            let half = 0.5 * n;
            (rec.n1_mean[k] - half).abs() <= self.band * half && (rec.n2_mean[k] - half).abs() <= self.band * half
        };
        let t_max = rec.times.last().copied().unwrap_or(0.0);
        let mut sig = ParitySignature {
            n0,
            classification: Classification::Undetermined,
            plateau_detected: false,
            collapse_time: None,
            plateau_duration: 0.0,
            event_time: None,
            t_max,
        };
        let Some(start) = (0..rec.len()).find(|&k| in_band(k)) else {
            return sig;
        };
        sig.collapse_time = Some(rec.times[start]);
        let threshold = self.event_fraction * n;
        for k in start..rec.len() {
            if k > start && in_band(k - 1) {
                sig.plateau_duration += rec.times[k] - rec.times[k - 1];
            }
            let class = if rec.n2_mean[k] >= threshold {
                Classification::Inversion
            } else if rec.n1_mean[k] >= threshold {
                Classification::Return
            } else {
                continue;
            };
            sig.classification = class;
            sig.event_time = Some(rec.times[k]);
            sig.plateau_detected = sig.plateau_duration >= self.plateau_fraction * rec.times[k];
            break;
        }
        sig
    }
}

/// Evolves |n₀, 0, −⟩ under H_eff on `space` and classifies the outcome.
pub fn parity_experiment_on(
    space: &Arc<HilbertSpec>,
    p: &ModelParams,
    n0: usize,
    t_max: f64,
    n_steps: usize,
) -> Result<(TrajectoryRecord, ParitySignature)> {
    if n0 == 0 {
        return Err(Error::InvalidArgument("n0 must be at least 1".into()));
    }
    if space.n_max() < n0 {
        return Err(Error::InsufficientCutoff {
            n_max: space.n_max(),
            required: n0,
        });
    }
    let times = time_grid(t_max, n_steps)?;
    let h = build_quadratic_hamiltonian(space, p)?;
    let psi0 = fock_state(space, n0, 0, Spin::Down)?;
    let rec = Propagator::new(&h)?.trajectory(&psi0, &times, false)?;
    let sig = ParityDetector::default().classify(n0, &rec);
    Ok((rec, sig))
}

/// Parity experiment on the smallest exact truncation, N_max = n₀.
pub fn parity_experiment(
    p: &ModelParams,
    n0: usize,
    t_max: f64,
    n_steps: usize,
) -> Result<(TrajectoryRecord, ParitySignature)> {
    parity_experiment_on(&HilbertSpec::two_mode(n0), p, n0, t_max, n_steps)
}

/// Doubles t_max from `t_start` (keeping the step size) until an event is
/// detected or `t_limit` is exceeded.
pub fn parity_experiment_scanned(
    p: &ModelParams,
    n0: usize,
    t_start: f64,
    t_limit: f64,
    steps_per_unit: f64,
) -> Result<(TrajectoryRecord, ParitySignature)> {
    if !(t_start > 0.0 && steps_per_unit > 0.0) {
        return Err(Error::InvalidArgument(
            "t_start and steps_per_unit must be positive".into(),
        ));
    }
    let mut t_max = t_start;
    loop {
        let n_steps = (t_max * steps_per_unit).ceil() as usize;
        let out = parity_experiment(p, n0, t_max, n_steps)?;
        if out.1.event_time.is_some() || 2.0 * t_max > t_limit {
            return Ok(out);
        }
        t_max *= 2.0;
    }
}
