//! Scenario generation and execution: random systems, the plant-shaped
//! benchmark, attack injection, and observation window capture.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lti::{self, batch_matrices, discretize_zoh, IndexSet, LtiSystem, StateSpace};
use crate::numerics::{self, Matrix, TolerancePolicy, Vector};
use crate::strong_obs::{self, WitnessScenario};

/// Attacked channel sets together with the injected signals.
///
/// `w_stream[t]` is added to the controller input at time `t` and
/// `a_stream[t]` to the measured output.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackScenario {
    pub attacked_inputs: IndexSet,
    pub attacked_outputs: IndexSet,
    pub r_bound: usize,
    pub s_bound: usize,
    pub w_stream: Vec<Vector>,
    pub a_stream: Vec<Vector>,
    pub seed: Option<u64>,
}

impl AttackScenario {
    /// Scenario with no attacked channels and zero signals over `horizon` steps.
    pub fn attack_free(m: usize, p: usize, horizon: usize) -> Self {
        Self {
            attacked_inputs: IndexSet::empty(m),
            attacked_outputs: IndexSet::empty(p),
            r_bound: 0,
            s_bound: 0,
            w_stream: vec![Vector::zeros(m); horizon],
            a_stream: vec![Vector::zeros(p); horizon],
            seed: None,
        }
    }

    /// Checks the budget and that signals stay on their declared supports.
    pub fn validate(&self) -> Result<()> {
        if self.attacked_inputs.len() > self.r_bound {
            return Err(Error::InvalidInput(format!(
                "{} attacked inputs exceed bound r = {}",
                self.attacked_inputs.len(),
                self.r_bound
            )));
        }
        if self.attacked_outputs.len() > self.s_bound {
            return Err(Error::InvalidInput(format!(
                "{} attacked outputs exceed bound s = {}",
                self.attacked_outputs.len(),
                self.s_bound
            )));
        }
        check_support(&self.w_stream, &self.attacked_inputs, "input attack")?;
        check_support(&self.a_stream, &self.attacked_outputs, "output attack")
    }
}

fn check_support(stream: &[Vector], support: &IndexSet, what: &str) -> Result<()> {
    for (t, v) in stream.iter().enumerate() {
        if v.len() != support.universe() {
            return Err(Error::InvalidInput(format!("{what} at t = {t} has length {}", v.len())));
        }
        if let Some(i) = (0..v.len()).find(|&i| v[i] != 0.0 && !support.contains(i)) {
            return Err(Error::InvalidInput(format!(
                "{what} at t = {t} is nonzero on channel {} outside its support",
                i + 1
            )));
        }
    }
    Ok(())
}

/// The most recent `tau` samples, stacked time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    /// Outputs, length `tau * p`.
    pub y: Vector,
    /// Controller inputs, length `tau * m`.
    pub u_ctrl: Vector,
    /// Time index of the last sample in the window.
    pub t_end: usize,
    pub tau: usize,
}

impl ObservationWindow {
    pub fn new(y: Vector, u_ctrl: Vector, t_end: usize, tau: usize) -> Result<Self> {
        if tau == 0 || y.len() % tau != 0 || u_ctrl.len() % tau != 0 {
            return Err(Error::InvalidInput(format!(
                "window stacks of length {} and {} do not split into {tau} samples",
                y.len(),
                u_ctrl.len()
            )));
        }
        if t_end + 1 < tau {
            return Err(Error::InvalidInput(format!("window of {tau} samples cannot end at t = {t_end}")));
        }
        numerics::ensure_finite_vec(&y, "window outputs")?;
        numerics::ensure_finite_vec(&u_ctrl, "window inputs")?;
        Ok(Self { y, u_ctrl, t_end, tau })
    }

    /// Builds a window from per-sample vectors (oldest first).
    pub fn from_samples(ys: &[Vector], us: &[Vector], t_end: usize) -> Result<Self> {
        if ys.len() != us.len() {
            return Err(Error::DimensionMismatch {
                context: "window samples",
                expected: ys.len(),
                actual: us.len(),
            });
        }
        let stack = |vs: &[Vector]| Vector::from_iterator(vs.iter().map(|v| v.len()).sum(), vs.iter().flat_map(|v| v.iter().copied()));
        Self::new(stack(ys), stack(us), t_end, ys.len())
    }

    pub fn p(&self) -> usize {
        self.y.len() / self.tau
    }

    pub fn m(&self) -> usize {
        self.u_ctrl.len() / self.tau
    }

    /// Time index of the first sample, which is when the estimated state lives.
    pub fn t_start(&self) -> usize {
        self.t_end + 1 - self.tau
    }

    fn check_against(&self, sys: &impl StateSpace) -> Result<()> {
        if self.p() != sys.p() {
            return Err(Error::DimensionMismatch {
                context: "window outputs",
                expected: sys.p(),
                actual: self.p(),
            });
        }
        if self.m() != sys.m() {
            return Err(Error::DimensionMismatch {
                context: "window inputs",
                expected: sys.m(),
                actual: self.m(),
            });
        }
        Ok(())
    }

    /// CSV with header `t,y_1..y_p,u_1..u_m` and one row per sample.
    pub fn to_csv(&self) -> String {
        let (p, m) = (self.p(), self.m());
        let mut header = vec!["t".to_string()];
        header.extend((1..=p).map(|i| format!("y_{i}")));
        header.extend((1..=m).map(|j| format!("u_{j}")));
        let mut out = header.join(",");
        out.push('\n');
        for k in 0..self.tau {
            let mut row = vec![(self.t_start() + k).to_string()];
            row.extend((0..p).map(|i| format!("{:e}", self.y[k * p + i])));
            row.extend((0..m).map(|j| format!("{:e}", self.u_ctrl[k * m + j])));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// What actually happened, for checking estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// State at the first sample of the window.
    pub x_at_estimate_time: Vector,
    /// States `x(0) .. x(T)`.
    pub trajectory: Vec<Vector>,
}

/// System with i.i.d. `U(0, 1)` entries; `A` is rescaled to spectral radius
/// one whenever it exceeds one.
pub fn random_system(n: usize, m: usize, p: usize, seed: u64) -> Result<LtiSystem> {
    if n == 0 || m == 0 || p == 0 {
        return Err(Error::InvalidInput(format!("random system needs positive dimensions, got ({n}, {m}, {p})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |r: usize, c: usize| Matrix::from_fn(r, c, |_, _| rng.random::<f64>());
    let mut a = draw(n, n);
    let b = draw(n, m);
    let c = draw(p, n);
    let d = draw(p, m);
    let rho = numerics::spectral_radius(&a)?;
    if rho > 1.0 {
        a /= rho;
    }
    LtiSystem::new(a, b, c, d)
}

/// Uniformly chosen attacked sets of exactly `r` inputs and `s` outputs
/// with standard normal signals on them for `horizon` steps.
pub fn random_scenario(sys: &impl StateSpace, r: usize, s: usize, horizon: usize, seed: u64) -> Result<AttackScenario> {
    let (m, p) = (sys.m(), sys.p());
    if r > m || s > p {
        return Err(Error::InvalidInput(format!("attack sizes ({r}, {s}) exceed channel counts ({m}, {p})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attacked_inputs = IndexSet::from_unsorted(sample(&mut rng, m, r).into_vec(), m)?;
    let attacked_outputs = IndexSet::from_unsorted(sample(&mut rng, p, s).into_vec(), p)?;
    let mut scen = signals_on(&mut rng, attacked_inputs, attacked_outputs, horizon);
    scen.r_bound = r;
    scen.s_bound = s;
    scen.seed = Some(seed);
    Ok(scen)
}

/// Standard normal signals on fixed attacked sets, with the bounds set to
/// their sizes.
pub fn scenario_on_supports(attacked_inputs: IndexSet, attacked_outputs: IndexSet, horizon: usize, seed: u64) -> AttackScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scen = signals_on(&mut rng, attacked_inputs, attacked_outputs, horizon);
    scen.seed = Some(seed);
    scen
}

fn signals_on(rng: &mut ChaCha8Rng, attacked_inputs: IndexSet, attacked_outputs: IndexSet, horizon: usize) -> AttackScenario {
    let mut stream = |set: &IndexSet| -> Vec<Vector> {
        (0..horizon)
            .map(|_| {
                let mut v = Vector::zeros(set.universe());
                for i in set.iter() {
                    v[i] = rng.sample(StandardNormal);
                }
                v
            })
            .collect()
    };
    let w_stream = stream(&attacked_inputs);
    let a_stream = stream(&attacked_outputs);
    AttackScenario {
        r_bound: attacked_inputs.len(),
        s_bound: attacked_outputs.len(),
        attacked_inputs,
        attacked_outputs,
        w_stream,
        a_stream,
        seed: None,
    }
}

/// Standard normal vector of length `n`.
pub fn random_vector(n: usize, seed: u64) -> Vector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn check_stream(stream: &[Vector], len: usize, steps: usize, what: &'static str) -> Result<()> {
    if stream.len() < steps {
        return Err(Error::DimensionMismatch {
            context: what,
            expected: steps,
            actual: stream.len(),
        });
    }
    if let Some(v) = stream.iter().find(|v| v.len() != len) {
        return Err(Error::DimensionMismatch {
            context: what,
            expected: len,
            actual: v.len(),
        });
    }
    Ok(())
}

/// Simulates the attacked plant for `t_total` steps.
///
/// Returns the observed outputs, the controller inputs, and the states
/// `x(0) .. x(t_total)`.
fn simulate_attacked(
    sys: &impl StateSpace,
    scen: &AttackScenario,
    x0: &Vector,
    u_ctrl: &[Vector],
    t_total: usize,
) -> Result<(Vec<Vector>, Vec<Vector>)> {
    let (n, m, p) = (sys.n(), sys.m(), sys.p());
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            context: "initial state",
            expected: n,
            actual: x0.len(),
        });
    }
    check_stream(u_ctrl, m, t_total, "controller input stream")?;
    check_stream(&scen.w_stream, m, t_total, "input attack stream")?;
    check_stream(&scen.a_stream, p, t_total, "output attack stream")?;
    scen.validate()?;

    let mut xs = Vec::with_capacity(t_total + 1);
    let mut ys = Vec::with_capacity(t_total);
    let mut x = x0.clone();
    for t in 0..t_total {
        let applied = &u_ctrl[t] + &scen.w_stream[t];
        ys.push(sys.c() * &x + sys.d() * &applied + &scen.a_stream[t]);
        let next = sys.a() * &x + sys.b() * &applied;
        xs.push(std::mem::replace(&mut x, next));
    }
    xs.push(x);
    Ok((ys, xs))
}

/// Runs the attacked plant for `t_total` steps and captures the last `n`
/// samples as the observation window.
pub fn run_scenario(
    sys: &impl StateSpace,
    scen: &AttackScenario,
    x0: &Vector,
    u_ctrl: &[Vector],
    t_total: usize,
) -> Result<(ObservationWindow, GroundTruth)> {
    let n = sys.n();
    if t_total < n {
        return Err(Error::InvalidInput(format!("horizon {t_total} is shorter than the window of {n} samples")));
    }
    let (ys, xs) = simulate_attacked(sys, scen, x0, u_ctrl, t_total)?;
    let start = t_total - n;
    let window = ObservationWindow::from_samples(&ys[start..], &u_ctrl[start..t_total], t_total - 1)?;
    let truth = GroundTruth {
        x_at_estimate_time: xs[start].clone(),
        trajectory: xs,
    };
    Ok((window, truth))
}

/// Observed outputs and controller inputs of one witness scenario.
pub fn run_witness(sys: &impl StateSpace, w: &WitnessScenario, horizon: usize) -> Result<(Vec<Vector>, Vec<Vector>)> {
    let (ys, _) = simulate_attacked(sys, &w.attack, &w.x0, &w.u_ctrl, horizon)?;
    Ok((ys, w.u_ctrl[..horizon].to_vec()))
}

/// Subtracts the response to the known controller input, leaving a window
/// that behaves as if the nominal input were zero.
pub fn remove_ctrl_effect(sys: &impl StateSpace, win: &ObservationWindow) -> Result<ObservationWindow> {
    win.check_against(sys)?;
    let bm = batch_matrices(sys, &IndexSet::full(sys.m()), &IndexSet::full(sys.p()), win.tau)?;
    let y = &win.y - &bm.inv * &win.u_ctrl;
    ObservationWindow::new(y, Vector::zeros(win.u_ctrl.len()), win.t_end, win.tau)
}

const PLANT_STATES: usize = 8;
const PLANT_INPUTS: usize = 4;
const PLANT_OUTPUTS: usize = 10;
const PLANT_DT: f64 = 5.0;
const PLANT_MAX_DRAWS: usize = 50;

#[rustfmt::skip]
const PLANT_A_PATTERN: [[u8; PLANT_STATES]; PLANT_STATES] = [
    [1, 1, 1, 1, 1, 1, 1, 0],
    [1, 1, 1, 1, 1, 0, 1, 0],
    [1, 1, 1, 1, 1, 0, 1, 0],
    [1, 1, 1, 1, 0, 0, 0, 1],
    [0, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 0, 0],
    [0, 0, 0, 0, 0, 0, 1, 0],
    [0, 0, 0, 1, 0, 0, 0, 1],
];

#[rustfmt::skip]
const PLANT_C_PATTERN: [[u8; PLANT_STATES]; PLANT_OUTPUTS] = [
    [0, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 0, 0, 1, 0, 0],
    [1, 1, 1, 1, 0, 0, 1, 0],
    [1, 1, 1, 1, 0, 0, 0, 1],
    [1, 1, 1, 1, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 0],
    [1, 1, 1, 0, 0, 0, 0, 0],
    [1, 1, 1, 0, 0, 0, 0, 0],
    [1, 1, 1, 0, 0, 0, 0, 0],
    [1, 1, 1, 0, 0, 0, 1, 1],
];

/// Actuated state for each input: actuators drive states 5..8 one-to-one.
const PLANT_B_ROWS: [usize; PLANT_INPUTS] = [4, 5, 6, 7];

fn signed_magnitude(rng: &mut ChaCha8Rng) -> f64 {
    let mag = rng.random_range(0.5..1.5);
    if rng.random::<bool>() {
        mag
    } else {
        -mag
    }
}

/// One continuous-time draw on the plant pattern.
///
/// Diagonal entries are negative and dominate their rows, making the
/// continuous dynamics stable; `Ac` is then normalized so that
/// `||Ac||_inf * dt = 1`, which keeps the discretized modes well separated
/// from both zero and the unit circle.
fn draw_plant_continuous(rng: &mut ChaCha8Rng) -> (Matrix, Matrix, Matrix) {
    let mut ac = Matrix::zeros(PLANT_STATES, PLANT_STATES);
    for (i, row) in PLANT_A_PATTERN.iter().enumerate() {
        for (j, &nz) in row.iter().enumerate() {
            if nz == 1 && i != j {
                ac[(i, j)] = signed_magnitude(rng);
            }
        }
        let off: f64 = ac.row(i).iter().map(|v| v.abs()).sum();
        ac[(i, i)] = -(off + rng.random_range(0.5..1.5));
    }
    ac /= ac.abs().column_sum().max() * PLANT_DT;

    let mut bc = Matrix::zeros(PLANT_STATES, PLANT_INPUTS);
    for (j, &i) in PLANT_B_ROWS.iter().enumerate() {
        bc[(i, j)] = rng.random_range(0.5..1.5);
    }
    let mut cc = Matrix::zeros(PLANT_OUTPUTS, PLANT_STATES);
    for (i, row) in PLANT_C_PATTERN.iter().enumerate() {
        for (j, &nz) in row.iter().enumerate() {
            if nz == 1 {
                cc[(i, j)] = signed_magnitude(rng);
            }
        }
    }
    (ac, bc, cc)
}

/// Continuous-time plant-shaped model `(Ac, Bc, Cc)` before discretization.
pub fn plant_continuous(seed: u64) -> (Matrix, Matrix, Matrix) {
    draw_plant_continuous(&mut ChaCha8Rng::seed_from_u64(seed))
}

/// Eight-state, four-input, ten-output plant with the benchmark sparsity
/// pattern, discretized with a 5 s zero-order hold, redrawn until it is
/// (2,4)-sparse strongly observable.
pub fn plant_system(seed: u64) -> Result<LtiSystem> {
    let pol = TolerancePolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..PLANT_MAX_DRAWS {
        let (ac, bc, cc) = draw_plant_continuous(&mut rng);
        let (a, b) = discretize_zoh(&ac, &bc, PLANT_DT)?;
        let sys = match LtiSystem::new(a, b, cc, Matrix::zeros(PLANT_OUTPUTS, PLANT_INPUTS)) {
            Ok(sys) => sys,
            Err(Error::ModelAssumption(_)) => continue,
            Err(e) => return Err(e),
        };
        if strong_obs::is_sparse_strongly_observable(&sys, 2, 4, &pol)?.holds {
            return Ok(sys);
        }
    }
    Err(Error::GenerationFailure(format!(
        "no (2,4)-sparse strongly observable plant after {PLANT_MAX_DRAWS} draws from seed {seed}"
    )))
}

/// Stacks a per-sample stream into one time-major vector.
pub fn stack(stream: &[Vector]) -> Vector {
    Vector::from_iterator(stream.iter().map(|v| v.len()).sum(), stream.iter().flat_map(|v| v.iter().copied()))
}

/// Outputs the unattacked plant would have produced, for comparison with the
/// observed window.
pub fn attack_free_outputs(sys: &impl StateSpace, x0: &Vector, u_applied: &[Vector], steps: usize) -> Result<Vec<Vector>> {
    Ok(lti::simulate(sys, x0, u_applied, steps)?.y)
}
