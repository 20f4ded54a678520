//! Continuous-time LTI plants, LQR synthesis and closed-loop simulation.
//!
//! The Riccati solver is a Newton–Kleinman iteration. Each Newton step is a
//! Lyapunov equation solved through its Kronecker-product linear system,
//! which is cheap at the plant sizes handled here (n ≤ 6 or so).

use nalgebra::{DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest admissible diagonal entry of R.
pub const R_EPSILON: f64 = 1e-9;

/// State magnitude beyond which a simulation is considered blown up.
pub const BLOWUP_LIMIT: f64 = 1e12;

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-10;
const CARE_ACCEPT_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("(A, B) is not controllable: controllability rank {rank} < {n}")]
    NonControllable { rank: usize, n: usize },
    #[error("Riccati iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid simulation settings: {0}")]
    InvalidSimulation(String),
}

/// Continuous LTI plant `x' = Ax + Bu`, `y = Cx + Du`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDocument", into = "ModelDocument")]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    state_names: Vec<String>,
    input_names: Vec<String>,
}

impl StateSpaceModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        state_names: Vec<String>,
        input_names: Vec<String>,
    ) -> Result<Self, ControlError> {
        let n = a.nrows();
        let m = b.ncols();
        if n == 0 || m == 0 {
            return Err(ControlError::InvalidModel(
                "need at least one state and one input".into(),
            ));
        }
        if !a.is_square() {
            return Err(ControlError::DimensionMismatch(format!(
                "A is {}x{}, expected square",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(ControlError::DimensionMismatch(format!(
                "B has {} rows, A has {n}",
                b.nrows()
            )));
        }
        if c.ncols() != n {
            return Err(ControlError::DimensionMismatch(format!(
                "C has {} columns, A has {n}",
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != m {
            return Err(ControlError::DimensionMismatch(format!(
                "D is {}x{}, expected {}x{m}",
                d.nrows(),
                d.ncols(),
                c.nrows()
            )));
        }
        if state_names.len() != n || input_names.len() != m {
            return Err(ControlError::DimensionMismatch(format!(
                "{} state names / {} input names for n={n}, m={m}",
                state_names.len(),
                input_names.len()
            )));
        }
        let all_finite = [&a, &b, &c, &d]
            .iter()
            .all(|mat| mat.iter().all(|v| v.is_finite()));
        if !all_finite {
            return Err(ControlError::InvalidModel("non-finite matrix entry".into()));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            state_names,
            input_names,
        })
    }

    /// Full-state output (`C = I`, `D = 0`) with generated labels.
    pub fn full_state(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self, ControlError> {
        let n = a.nrows();
        let m = b.ncols();
        Self::new(
            a,
            b,
            DMatrix::identity(n, n),
            DMatrix::zeros(n, m),
            (1..=n).map(|i| format!("x{i}")).collect(),
            (1..=m).map(|i| format!("u{i}")).collect(),
        )
    }

    pub fn with_names(
        mut self,
        state_names: Vec<String>,
        input_names: Vec<String>,
    ) -> Result<Self, ControlError> {
        if state_names.len() != self.n_states() || input_names.len() != self.n_inputs() {
            return Err(ControlError::DimensionMismatch(
                "label count does not match model dimensions".into(),
            ));
        }
        self.state_names = state_names;
        self.input_names = input_names;
        Ok(self)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// `[B, AB, ..., A^{n-1}B]`
    pub fn controllability_matrix(&self) -> DMatrix<f64> {
        let n = self.n_states();
        let m = self.n_inputs();
        let mut ctrb = DMatrix::zeros(n, n * m);
        let mut block = self.b.clone();
        for k in 0..n {
            ctrb.view_mut((0, k * m), (n, m)).copy_from(&block);
            block = &self.a * block;
        }
        ctrb
    }

    pub fn controllability_rank(&self) -> usize {
        let ctrb = self.controllability_matrix();
        let svd = ctrb.svd(false, false);
        let sigma_max = svd.singular_values.max();
        if sigma_max == 0.0 {
            return 0;
        }
        let tol = sigma_max * 1e-10 * self.n_states().max(self.n_inputs()) as f64;
        svd.singular_values.iter().filter(|&&s| s > tol).count()
    }

    pub fn is_controllable(&self) -> bool {
        self.controllability_rank() == self.n_states()
    }
}

/// Row-major document form of [`StateSpaceModel`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C", default)]
    pub c: Option<Vec<Vec<f64>>>,
    #[serde(rename = "D", default)]
    pub d: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub state_names: Option<Vec<String>>,
    #[serde(default)]
    pub input_names: Option<Vec<String>>,
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>], ncols_hint: usize) -> Result<DMatrix<f64>, ControlError> {
    if rows.is_empty() {
        return Ok(DMatrix::zeros(0, ncols_hint));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ControlError::DimensionMismatch(format!("{name} has ragged rows")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

impl TryFrom<ModelDocument> for StateSpaceModel {
    type Error = ControlError;

    fn try_from(doc: ModelDocument) -> Result<Self, Self::Error> {
        let a = matrix_from_rows("A", &doc.a, 0)?;
        let b = matrix_from_rows("B", &doc.b, 0)?;
        let n = a.nrows();
        let m = b.ncols();
        let c = match doc.c {
            Some(rows) => matrix_from_rows("C", &rows, n)?,
            None => DMatrix::identity(n, n),
        };
        let d = match doc.d {
            Some(rows) => matrix_from_rows("D", &rows, m)?,
            None => DMatrix::zeros(c.nrows(), m),
        };
        let state_names = doc
            .state_names
            .unwrap_or_else(|| (1..=n).map(|i| format!("x{i}")).collect());
        let input_names = doc
            .input_names
            .unwrap_or_else(|| (1..=m).map(|i| format!("u{i}")).collect());
        StateSpaceModel::new(a, b, c, d, state_names, input_names)
    }
}

impl From<StateSpaceModel> for ModelDocument {
    fn from(model: StateSpaceModel) -> Self {
        ModelDocument {
            a: matrix_to_rows(&model.a),
            b: matrix_to_rows(&model.b),
            c: Some(matrix_to_rows(&model.c)),
            d: Some(matrix_to_rows(&model.d)),
            state_names: Some(model.state_names),
            input_names: Some(model.input_names),
        }
    }
}

/// Diagonal Q and R.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightingConfig {
    pub q_diag: Vec<f64>,
    pub r_diag: Vec<f64>,
}

impl WeightingConfig {
    pub fn new(q_diag: Vec<f64>, r_diag: Vec<f64>) -> Result<Self, ControlError> {
        let w = Self { q_diag, r_diag };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        if let Some((i, q)) = self
            .q_diag
            .iter()
            .enumerate()
            .find(|(_, q)| !(q.is_finite() && **q >= 0.0))
        {
            return Err(ControlError::InvalidWeights(format!("Q[{i}] = {q} is not >= 0")));
        }
        if let Some((j, r)) = self
            .r_diag
            .iter()
            .enumerate()
            .find(|(_, r)| !(r.is_finite() && **r >= R_EPSILON))
        {
            return Err(ControlError::InvalidWeights(format!(
                "R[{j}] = {r} is below {R_EPSILON:e}"
            )));
        }
        Ok(())
    }

    fn check_against(&self, model: &StateSpaceModel) -> Result<(), ControlError> {
        if self.q_diag.len() != model.n_states() || self.r_diag.len() != model.n_inputs() {
            return Err(ControlError::InvalidWeights(format!(
                "weights sized {}+{} for a model with n={}, m={}",
                self.q_diag.len(),
                self.r_diag.len(),
                model.n_states(),
                model.n_inputs()
            )));
        }
        self.validate()
    }

    pub fn q_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.q_diag))
    }

    pub fn r_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.r_diag))
    }

    /// Multiplies every entry of Q and R by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            q_diag: self.q_diag.iter().map(|q| q * c).collect(),
            r_diag: self.r_diag.iter().map(|r| r * c).collect(),
        }
    }
}

/// State-feedback gain `K` (m x n), applied as `u = -Kx`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix(DMatrix<f64>);

impl GainMatrix {
    pub fn new(k: DMatrix<f64>) -> Self {
        Self(k)
    }

    pub fn zeros(model: &StateSpaceModel) -> Self {
        Self(DMatrix::zeros(model.n_inputs(), model.n_states()))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    fn check_against(&self, model: &StateSpaceModel) -> Result<(), ControlError> {
        if self.0.nrows() != model.n_inputs() || self.0.ncols() != model.n_states() {
            return Err(ControlError::DimensionMismatch(format!(
                "gain is {}x{}, model needs {}x{}",
                self.0.nrows(),
                self.0.ncols(),
                model.n_inputs(),
                model.n_states()
            )));
        }
        Ok(())
    }
}

/// Fixed-step closed-loop samples. Column `k` of `states`/`inputs` is the
/// sample at `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: DMatrix<f64>,
    pub inputs: DMatrix<f64>,
    pub dt: f64,
    pub horizon: f64,
    /// Set when a state exceeded [`BLOWUP_LIMIT`]; the samples stop there.
    pub blown_up: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_states(&self) -> usize {
        self.states.nrows()
    }

    pub fn state_series(&self, index: usize) -> Vec<f64> {
        self.states.row(index).iter().copied().collect()
    }

    pub fn final_state(&self) -> DVector<f64> {
        self.states.column(self.len() - 1).into_owned()
    }
}

/// Solves `F X + X F^T = rhs` through `(I ⊗ F + F ⊗ I) vec(X) = vec(rhs)`.
pub fn solve_lyapunov(f: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = f.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let op = eye.kronecker(f) + f.kronecker(&eye);
    let vec_rhs = DVector::from_column_slice(rhs.as_slice());
    let sol = op.lu().solve(&vec_rhs)?;
    let x = DMatrix::from_column_slice(n, n, sol.as_slice());
    Some((&x + x.transpose()) * 0.5)
}

/// Largest real part over the eigenvalues of `m`; `+inf` if the Schur
/// iteration fails.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    match Schur::try_new(m.clone(), f64::EPSILON, 10_000) {
        Some(schur) => schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max),
        None => f64::INFINITY,
    }
}

/// `A - BK`
pub fn closed_loop_matrix(model: &StateSpaceModel, gain: &GainMatrix) -> DMatrix<f64> {
    model.a() - model.b() * gain.matrix()
}

/// Frobenius norm of `PA + A^T P + Q - P B R^{-1} B^T P`.
pub fn care_residual(model: &StateSpaceModel, weights: &WeightingConfig, p: &DMatrix<f64>) -> f64 {
    care_residual_parts(model, weights, p).0
}

/// Residual norm plus the summed norms of its terms, used as a scale.
fn care_residual_parts(
    model: &StateSpaceModel,
    weights: &WeightingConfig,
    p: &DMatrix<f64>,
) -> (f64, f64) {
    let a = model.a();
    let pa = p * a;
    let bt_p = model.b().transpose() * p;
    let mut rinv_bt_p = bt_p.clone();
    for (j, r) in weights.r_diag.iter().enumerate() {
        rinv_bt_p.row_mut(j).scale_mut(1.0 / r);
    }
    let quad = bt_p.transpose() * rinv_bt_p;
    let q = weights.q_matrix();
    let res = &pa + pa.transpose() + &q - &quad;
    let scale = 2.0 * pa.norm() + q.norm() + quad.norm();
    (res.norm(), scale)
}

/// Initial stabilizing gain. Zero if A is already Hurwitz, otherwise Bass's
/// construction: with `beta` shifting A's spectrum into the open right half
/// plane, `K0 = B^T X^{-1}` where `(A + beta I) X + X (A + beta I)^T = 2 B B^T`.
fn initial_stabilizing_gain(model: &StateSpaceModel) -> Option<DMatrix<f64>> {
    let a = model.a();
    let n = model.n_states();
    if spectral_abscissa(a) < 0.0 {
        return Some(DMatrix::zeros(model.n_inputs(), n));
    }
    let neg_abscissa = spectral_abscissa(&(-a));
    let beta = neg_abscissa.max(0.0) + 1.0;
    let shifted = a + DMatrix::identity(n, n) * beta;
    let bbt = model.b() * model.b().transpose() * 2.0;
    let x = solve_lyapunov(&shifted, &bbt)?;
    let x_inv = x.try_inverse()?;
    Some(model.b().transpose() * x_inv)
}

/// Whether `(A, Q^{1/2})` has an unobservable mode on the imaginary axis.
/// No stabilizing solution exists then; Newton iterates only creep toward
/// a marginally stable limit.
fn has_undetectable_axis_mode(a: &DMatrix<f64>, q_diag: &[f64]) -> bool {
    let n = a.nrows();
    let rows: Vec<usize> = (0..n).filter(|&i| q_diag[i] > 0.0).collect();
    if rows.len() == n {
        return false;
    }
    let mut c = DMatrix::zeros(rows.len().max(1), n);
    for (k, &i) in rows.iter().enumerate() {
        c[(k, i)] = q_diag[i].sqrt();
    }
    let mut obs = DMatrix::zeros(c.nrows() * n, n);
    let mut block = c;
    for k in 0..n {
        obs.rows_mut(k * block.nrows(), block.nrows()).copy_from(&block);
        block = &block * a;
    }
    let obs_rows = obs.nrows();
    let svd = obs.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let s_max = svd.singular_values.max();
    let tol = s_max.max(f64::MIN_POSITIVE) * 1e-10 * (obs_rows.max(n) as f64);
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= tol)
        .chain(svd.singular_values.len()..n)
        .collect();
    if null.is_empty() {
        return false;
    }
    let mut basis = DMatrix::zeros(n, null.len());
    for (k, &i) in null.iter().enumerate() {
        basis.set_column(k, &v_t.row(i).transpose());
    }
    let restricted = basis.transpose() * a * &basis;
    let axis_tol = 1e-9 * a.norm().max(1.0);
    restricted
        .complex_eigenvalues()
        .iter()
        .any(|l| l.re.abs() <= axis_tol)
}

/// Stabilizing solution of the continuous algebraic Riccati equation
/// `PA + A^T P + Q - P B R^{-1} B^T P = 0`.
pub fn solve_care(model: &StateSpaceModel, weights: &WeightingConfig) -> Result<DMatrix<f64>, ControlError> {
    weights.check_against(model)?;
    let n = model.n_states();
    let rank = model.controllability_rank();
    if rank < n {
        return Err(ControlError::NonControllable { rank, n });
    }
    if has_undetectable_axis_mode(model.a(), &weights.q_diag) {
        return Err(ControlError::NoConvergence {
            iterations: 0,
            residual: f64::INFINITY,
        });
    }

    let mut k = initial_stabilizing_gain(model).ok_or(ControlError::NoConvergence {
        iterations: 0,
        residual: f64::INFINITY,
    })?;
    let q = weights.q_matrix();
    let r = weights.r_matrix();
    let bt = model.b().transpose();

    let mut p_prev: Option<DMatrix<f64>> = None;
    let mut residual = f64::INFINITY;
    for iter in 1..=NEWTON_MAX_ITER {
        let a_cl = model.a() - model.b() * &k;
        let rhs = -(&q + k.transpose() * &r * &k);
        let p = solve_lyapunov(&a_cl.transpose(), &rhs).ok_or(ControlError::NoConvergence {
            iterations: iter,
            residual,
        })?;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(ControlError::NoConvergence {
                iterations: iter,
                residual,
            });
        }
        let mut k_next = &bt * &p;
        for (j, rj) in weights.r_diag.iter().enumerate() {
            k_next.row_mut(j).scale_mut(1.0 / rj);
        }
        let (res, scale) = care_residual_parts(model, weights, &p);
        residual = res;
        let p_norm = p.norm();
        let stalled = p_prev
            .as_ref()
            .is_some_and(|prev| (&p - prev).norm() <= 1e-14 * p_norm.max(f64::MIN_POSITIVE));

        if res <= NEWTON_TOL * scale || stalled {
            if res > CARE_ACCEPT_TOL * p_norm.max(1.0) {
                return Err(ControlError::NoConvergence {
                    iterations: iter,
                    residual: res,
                });
            }
            let gain = GainMatrix(k_next);
            if stability_check(model, &gain) >= 0.0 {
                return Err(ControlError::NoConvergence {
                    iterations: iter,
                    residual: res,
                });
            }
            return Ok(p);
        }
        k = k_next;
        p_prev = Some(p);
    }

    // Cap reached: accept only if the residual meets the contract anyway.
    if let Some(p) = p_prev {
        let gain = compute_gain(&p, model, weights)?;
        if residual <= CARE_ACCEPT_TOL * p.norm().max(1.0) && stability_check(model, &gain) < 0.0 {
            return Ok(p);
        }
    }
    Err(ControlError::NoConvergence {
        iterations: NEWTON_MAX_ITER,
        residual,
    })
}

/// `K = R^{-1} B^T P`
pub fn compute_gain(
    p: &DMatrix<f64>,
    model: &StateSpaceModel,
    weights: &WeightingConfig,
) -> Result<GainMatrix, ControlError> {
    let n = model.n_states();
    if p.nrows() != n || p.ncols() != n {
        return Err(ControlError::DimensionMismatch(format!(
            "P is {}x{}, model has n={n}",
            p.nrows(),
            p.ncols()
        )));
    }
    if weights.r_diag.len() != model.n_inputs() {
        return Err(ControlError::DimensionMismatch(format!(
            "R has {} entries, model has m={}",
            weights.r_diag.len(),
            model.n_inputs()
        )));
    }
    let mut k = model.b().transpose() * p;
    for (j, r) in weights.r_diag.iter().enumerate() {
        k.row_mut(j).scale_mut(1.0 / r);
    }
    Ok(GainMatrix(k))
}

/// Spectral abscissa of `A - BK`; negative iff the loop is asymptotically stable.
pub fn stability_check(model: &StateSpaceModel, gain: &GainMatrix) -> f64 {
    spectral_abscissa(&closed_loop_matrix(model, gain))
}

/// One classical RK4 step of `x' = Mx` is `x <- Phi x` with
/// `Phi = I + hM + (hM)^2/2 + (hM)^3/6 + (hM)^4/24`.
fn rk4_transition(m: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let hm = m * h;
    let mut phi = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=4 {
        term = &term * &hm / k as f64;
        phi += &term;
    }
    phi
}

/// Integrates `x' = (A - BK) x` from `x0` with fixed-step RK4, recording
/// `u = -Kx` at every sample.
pub fn simulate_closed_loop(
    model: &StateSpaceModel,
    gain: &GainMatrix,
    x0: &[f64],
    horizon: f64,
    dt: f64,
) -> Result<Trajectory, ControlError> {
    gain.check_against(model)?;
    let n = model.n_states();
    if x0.len() != n {
        return Err(ControlError::DimensionMismatch(format!(
            "x0 has {} entries, model has n={n}",
            x0.len()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ControlError::InvalidSimulation(format!("dt = {dt} must be > 0")));
    }
    if !(horizon >= dt && horizon.is_finite()) {
        return Err(ControlError::InvalidSimulation(format!(
            "horizon = {horizon} must be >= dt = {dt}"
        )));
    }
    let steps = (horizon / dt).round() as usize;
    let k = gain.matrix();
    let phi = rk4_transition(&closed_loop_matrix(model, gain), dt);

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = DMatrix::zeros(n, steps + 1);
    let mut x = DVector::from_column_slice(x0);
    let mut next = DVector::zeros(n);
    let mut blown_up = false;
    let mut len = 0;
    for step in 0..=steps {
        if x.iter().any(|v| !(v.abs() <= BLOWUP_LIMIT)) {
            blown_up = true;
            break;
        }
        times.push(step as f64 * dt);
        states.set_column(step, &x);
        len += 1;
        next.gemv(1.0, &phi, &x, 0.0);
        std::mem::swap(&mut x, &mut next);
    }
    let states = states.columns(0, len).into_owned();
    let inputs = -(k * &states);
    Ok(Trajectory {
        times,
        states,
        inputs,
        dt,
        horizon,
        blown_up,
    })
}

/// Trapezoidal `∫ (x^T Q x + u^T R u) dt` over the trajectory; `+inf` for a
/// blown-up trajectory.
pub fn quadratic_index(traj: &Trajectory, weights: &WeightingConfig) -> f64 {
    if traj.blown_up {
        return f64::INFINITY;
    }
    let integrand = |k: usize| -> f64 {
        let xq: f64 = traj
            .states
            .column(k)
            .iter()
            .zip(&weights.q_diag)
            .map(|(x, q)| q * x * x)
            .sum();
        let ur: f64 = traj
            .inputs
            .column(k)
            .iter()
            .zip(&weights.r_diag)
            .map(|(u, r)| r * u * u)
            .sum();
        xq + ur
    };
    if traj.len() < 2 {
        return 0.0;
    }
    let mut prev = integrand(0);
    let mut total = 0.0;
    for k in 1..traj.len() {
        let cur = integrand(k);
        total += 0.5 * (prev + cur) * (traj.times[k] - traj.times[k - 1]);
        prev = cur;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar(a: f64, b: f64) -> StateSpaceModel {
        StateSpaceModel::full_state(DMatrix::from_element(1, 1, a), DMatrix::from_element(1, 1, b)).unwrap()
    }

    fn double_integrator() -> StateSpaceModel {
        StateSpaceModel::full_state(
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
        )
        .unwrap()
    }

    fn w(q: &[f64], r: &[f64]) -> WeightingConfig {
        WeightingConfig::new(q.to_vec(), r.to_vec()).unwrap()
    }

    #[test]
    fn scalar_integrator_riccati() {
        let p = solve_care(&scalar(0.0, 1.0), &w(&[1.0], &[1.0])).unwrap();
        assert_abs_diff_eq!(p[(0, 0)], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn stable_plant_zero_state_weight() {
        let p = solve_care(&scalar(-1.0, 1.0), &w(&[0.0], &[1.0])).unwrap();
        assert_abs_diff_eq!(p[(0, 0)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn double_integrator_riccati_and_gain() {
        let model = double_integrator();
        let weights = w(&[1.0, 1.0], &[1.0]);
        let p = solve_care(&model, &weights).unwrap();
        let s3 = 3f64.sqrt();
        assert_abs_diff_eq!(p[(0, 0)], s3, epsilon = 1e-9);
        assert_abs_diff_eq!(p[(0, 1)], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p[(1, 0)], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p[(1, 1)], s3, epsilon = 1e-9);
        let k = compute_gain(&p, &model, &weights).unwrap();
        assert_abs_diff_eq!(k.matrix()[(0, 0)], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(k.matrix()[(0, 1)], s3, epsilon = 1e-9);
    }

    #[test]
    fn unweighted_integrator_mode_has_no_stabilizing_solution() {
        let err = solve_care(&double_integrator(), &w(&[0.0, 1.0], &[1.0])).unwrap_err();
        assert!(matches!(err, ControlError::NoConvergence { .. }));
        assert!(solve_care(&double_integrator(), &w(&[1.0, 0.0], &[1.0])).is_ok());
        assert!(solve_care(&scalar(-1.0, 1.0), &w(&[0.0], &[1.0])).is_ok());
    }

    #[test]
    fn gain_is_elementwise_r_inverse() {
        let model = scalar(0.0, 1.0);
        let p = DMatrix::from_element(1, 1, 4.0);
        let k = compute_gain(&p, &model, &w(&[1.0], &[2.0])).unwrap();
        assert_eq!(k.matrix()[(0, 0)], 2.0);
        let k = compute_gain(&DMatrix::from_element(1, 1, 1.0), &model, &w(&[1.0], &[1.0])).unwrap();
        assert_eq!(k.matrix()[(0, 0)], 1.0);
    }

    #[test]
    fn gain_dimension_mismatch() {
        let model = double_integrator();
        let err = compute_gain(&DMatrix::zeros(3, 3), &model, &w(&[1.0, 1.0], &[1.0])).unwrap_err();
        assert!(matches!(err, ControlError::DimensionMismatch(_)));
    }

    #[test]
    fn uncontrollable_is_rejected() {
        let model = StateSpaceModel::full_state(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        )
        .unwrap();
        let err = solve_care(&model, &w(&[1.0, 1.0], &[1.0])).unwrap_err();
        assert_eq!(err, ControlError::NonControllable { rank: 1, n: 2 });
    }

    #[test]
    fn bad_weights_are_rejected() {
        assert!(WeightingConfig::new(vec![-1.0], vec![1.0]).is_err());
        assert!(WeightingConfig::new(vec![1.0], vec![0.0]).is_err());
        assert!(WeightingConfig::new(vec![0.0], vec![R_EPSILON]).is_ok());
        let bad = WeightingConfig {
            q_diag: vec![1.0],
            r_diag: vec![1e-12],
        };
        let err = solve_care(&scalar(0.0, 1.0), &bad).unwrap_err();
        assert!(matches!(err, ControlError::InvalidWeights(_)));
    }

    #[test]
    fn first_order_decay() {
        let model = scalar(0.0, 1.0);
        let k = GainMatrix::new(DMatrix::from_element(1, 1, 1.0));
        let traj = simulate_closed_loop(&model, &k, &[1.0], 1.0, 1e-3).unwrap();
        assert_eq!(traj.len(), 1001);
        assert_abs_diff_eq!(traj.final_state()[0], (-1.0f64).exp(), epsilon = 1e-6);
        for idx in 0..traj.len() {
            assert_eq!(traj.inputs[(0, idx)], -traj.states[(0, idx)]);
        }
    }

    #[test]
    fn zero_dynamics_stay_put() {
        let model = StateSpaceModel::full_state(
            DMatrix::zeros(1, 1),
            DMatrix::from_row_slice(1, 2, &[3.0, -1.0]),
        )
        .unwrap();
        let traj = simulate_closed_loop(&model, &GainMatrix::zeros(&model), &[2.5], 2.0, 0.1).unwrap();
        assert!(traj.states.iter().all(|&x| x == 2.5));
        assert!(traj.inputs.iter().all(|&u| u == 0.0));
        assert!(!traj.blown_up);
    }

    #[test]
    fn unstable_loop_is_flagged_not_failed() {
        let model = scalar(5.0, 1.0);
        let traj = simulate_closed_loop(&model, &GainMatrix::zeros(&model), &[1.0], 10.0, 0.01).unwrap();
        assert!(traj.blown_up);
        assert!(traj.len() < 1001);
        assert_eq!(quadratic_index(&traj, &w(&[1.0], &[1.0])), f64::INFINITY);
    }

    #[test]
    fn simulation_rejects_bad_steps() {
        let model = scalar(0.0, 1.0);
        let k = GainMatrix::zeros(&model);
        assert!(simulate_closed_loop(&model, &k, &[1.0], 1.0, 0.0).is_err());
        assert!(simulate_closed_loop(&model, &k, &[1.0], 0.001, 0.01).is_err());
        assert!(simulate_closed_loop(&model, &k, &[1.0, 2.0], 1.0, 0.1).is_err());
    }

    #[test]
    fn quadratic_index_cases() {
        let model = scalar(0.0, 1.0);
        let weights = w(&[1.0], &[1.0]);
        let k = GainMatrix::new(DMatrix::from_element(1, 1, 1.0));
        let zero = simulate_closed_loop(&model, &k, &[0.0], 5.0, 0.01).unwrap();
        assert_eq!(quadratic_index(&zero, &weights), 0.0);
        let traj = simulate_closed_loop(&model, &k, &[1.0], 20.0, 1e-3).unwrap();
        assert_abs_diff_eq!(quadratic_index(&traj, &weights), 1.0, epsilon = 1e-3);

        let di = double_integrator();
        let weights = w(&[1.0, 1.0], &[1.0]);
        let p = solve_care(&di, &weights).unwrap();
        let k = compute_gain(&p, &di, &weights).unwrap();
        let traj = simulate_closed_loop(&di, &k, &[1.0, 0.0], 40.0, 0.01).unwrap();
        let j = quadratic_index(&traj, &weights);
        assert!((j - 3f64.sqrt()).abs() < 0.01 * 3f64.sqrt(), "J = {j}");
    }

    #[test]
    fn stability_examples() {
        let m = scalar(-1.0, 0.0);
        assert_abs_diff_eq!(stability_check(&m, &GainMatrix::zeros(&m)), -1.0, epsilon = 1e-12);
        let m = scalar(0.0, 1.0);
        let k = GainMatrix::new(DMatrix::from_element(1, 1, 1.0));
        assert_abs_diff_eq!(stability_check(&m, &k), -1.0, epsilon = 1e-12);
        // s^2 + sqrt(3) s + 1: roots -sqrt(3)/2 ± i/2
        let di = double_integrator();
        let k = GainMatrix::new(DMatrix::from_row_slice(1, 2, &[1.0, 3f64.sqrt()]));
        assert_abs_diff_eq!(stability_check(&di, &k), -3f64.sqrt() / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let di = double_integrator();
        let k = GainMatrix::new(DMatrix::from_row_slice(1, 2, &[1.0, 3f64.sqrt()]));
        let x_at = |dt: f64| {
            simulate_closed_loop(&di, &k, &[1.0, -0.5], 4.0, dt)
                .unwrap()
                .final_state()
        };
        let reference = x_at(1e-4);
        let e1 = (x_at(0.1) - &reference).norm();
        let e2 = (x_at(0.05) - &reference).norm();
        let ratio = e1 / e2;
        assert!((13.0..19.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn model_document_round_trip() {
        let model = double_integrator()
            .with_names(vec!["pos".into(), "vel".into()], vec!["force".into()])
            .unwrap();
        let text = serde_json::to_string(&model).unwrap();
        assert!(text.contains("\"A\":[[0.0,1.0],[0.0,0.0]]"));
        let back: StateSpaceModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn model_document_validation() {
        let bad = r#"{"A": [[0, 1], [0, 0]], "B": [[1]]}"#;
        assert!(serde_json::from_str::<StateSpaceModel>(bad).is_err());
        let ragged = r#"{"A": [[0, 1], [0]], "B": [[1], [0]]}"#;
        assert!(serde_json::from_str::<StateSpaceModel>(ragged).is_err());
    }
}
