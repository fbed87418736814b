//! Python bindings: channel model, TOW learner, Bombe, game oracle and the
//! Monte Carlo runner.

use pyo3::exceptions::{PyMemoryError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tow_bombe::harness::{run_experiment as run_samples, Anchors, ExperimentConfig, PolicyKind, RunSummary};
use tow_bombe::rng::{seeded, SimRng};
use tow_bombe::tow::{self, Fluctuation};
use tow_bombe::{oracle, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Resource { .. } => PyMemoryError::new_err(e.to_string()),
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn machine(name: &str) -> PyResult<tow::Machine> {
    match name {
        "A" | "a" => Ok(tow::Machine::A),
        "B" | "b" => Ok(tow::Machine::B),
        other => Err(PyValueError::new_err(format!("machine must be 'A' or 'B', got {other:?}"))),
    }
}

fn machine_name(m: tow::Machine) -> &'static str {
    match m {
        tow::Machine::A => "A",
        tow::Machine::B => "B",
    }
}

/// Seeded random stream (ChaCha8).
#[pyclass(name = "Rng")]
struct PyRng {
    inner: SimRng,
}

#[pymethods]
impl PyRng {
    #[new]
    fn new(seed: u64) -> Self {
        PyRng { inner: seeded(seed) }
    }
}

#[pyclass(name = "ChannelModel")]
struct PyChannelModel {
    inner: tow_bombe::ChannelModel,
}

#[pymethods]
impl PyChannelModel {
    #[new]
    #[pyo3(signature = (probs, collision_mode = "coin-lottery"))]
    fn new(probs: Vec<f64>, collision_mode: &str) -> PyResult<Self> {
        let mode = collision_mode.parse().map_err(to_py)?;
        Ok(PyChannelModel {
            inner: tow_bombe::ChannelModel::new(probs, mode).map_err(to_py)?,
        })
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.inner.probs().to_vec()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.inner.channels()
    }

    #[getter]
    fn collision_mode(&self) -> String {
        self.inner.collision_mode().to_string()
    }

    fn expected_payoff(&self, action: Vec<usize>) -> PyResult<Vec<f64>> {
        self.inner.expected_payoff(&action.into()).map_err(to_py)
    }

    /// Returns `(free, rewards, rewarded)`.
    fn step(&self, action: Vec<usize>, rng: &mut PyRng) -> PyResult<(Vec<bool>, Vec<f64>, Vec<bool>)> {
        let out = self.inner.step(&action.into(), &mut rng.inner).map_err(to_py)?;
        Ok((out.free, out.rewards, out.rewarded))
    }

    fn __repr__(&self) -> String {
        format!("ChannelModel(probs={:?}, collision_mode='{}')", self.inner.probs(), self.inner.collision_mode())
    }
}

/// Two-machine tug-of-war learner.
#[pyclass(name = "TowState")]
struct PyTowState {
    inner: tow_bombe::TowState,
}

#[pymethods]
impl PyTowState {
    #[new]
    fn new(omega: f64) -> PyResult<Self> {
        Ok(PyTowState {
            inner: tow_bombe::TowState::new(omega).map_err(to_py)?,
        })
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega()
    }

    fn plays(&self, k: &str) -> PyResult<u64> {
        Ok(self.inner.plays(machine(k)?))
    }

    fn failures(&self, k: &str) -> PyResult<u64> {
        Ok(self.inner.failures(machine(k)?))
    }

    fn q_estimate(&self, k: &str) -> PyResult<f64> {
        Ok(self.inner.q_estimate(machine(k)?))
    }

    fn update(&mut self, k: &str, rewarded: bool) -> PyResult<()> {
        self.inner.update(machine(k)?, rewarded);
        Ok(())
    }

    #[pyo3(signature = (delta = 0.0))]
    fn displacement(&self, delta: f64) -> f64 {
        self.inner.displacement(delta)
    }

    /// `fluctuation` is "none", "gaussian" (scale = sigma) or "alternating" (scale = amplitude).
    #[pyo3(signature = (rng, t, fluctuation = "gaussian", scale = 1.0))]
    fn select(&self, rng: &mut PyRng, t: u64, fluctuation: &str, scale: f64) -> PyResult<&'static str> {
        let f = match fluctuation {
            "none" => Fluctuation::None,
            "gaussian" => Fluctuation::Gaussian { sigma: scale },
            "alternating" => Fluctuation::Alternating { amplitude: scale },
            other => return Err(PyValueError::new_err(format!("unknown fluctuation {other:?}"))),
        };
        f.validate().map_err(to_py)?;
        Ok(machine_name(self.inner.select(&f, &mut rng.inner, t)))
    }

    fn q_prime(&self, gamma: f64, k: &str) -> PyResult<f64> {
        Ok(self.inner.q_prime(gamma, machine(k)?))
    }

    fn q_double_prime(&self, gamma: f64, k: &str) -> PyResult<f64> {
        self.inner.q_double_prime(gamma, machine(k)?).map_err(to_py)
    }
}

#[pyclass(name = "Bombe")]
struct PyBombe {
    inner: tow_bombe::Bombe,
}

#[pymethods]
impl PyBombe {
    #[new]
    #[pyo3(signature = (users, channels, omega, amplitude = 0.5, period = None))]
    fn new(users: usize, channels: usize, omega: f64, amplitude: f64, period: Option<usize>) -> PyResult<Self> {
        let config = tow_bombe::BombeConfig {
            users,
            channels,
            omega,
            amplitude,
            period: period.unwrap_or(channels),
        };
        Ok(PyBombe {
            inner: tow_bombe::Bombe::new(config).map_err(to_py)?,
        })
    }

    #[getter]
    fn t(&self) -> u64 {
        self.inner.state.t()
    }

    /// Estimate matrix, one row per user.
    #[getter]
    fn q(&self) -> Vec<Vec<f64>> {
        self.inner.state.rows()
    }

    fn heights(&self) -> Vec<Vec<f64>> {
        self.inner.heights()
    }

    fn osc(&self, t: u64, k: usize) -> f64 {
        self.inner.config.osc(t, k)
    }

    fn select(&self, rng: &mut PyRng) -> PyResult<Vec<usize>> {
        let action = self
            .inner
            .config
            .select_all(&self.inner.state, &mut rng.inner)
            .map_err(to_py)?;
        Ok(action.choices().to_vec())
    }

    fn apply_results(&mut self, action: Vec<usize>, rewarded: Vec<bool>) -> PyResult<()> {
        let bombe = &mut self.inner;
        bombe
            .config
            .apply_results(&mut bombe.state, &action.into(), &rewarded)
            .map_err(to_py)
    }

    /// One slot: returns `(action, rewards, rewarded)`.
    fn step(&mut self, model: &PyChannelModel, rng: &mut PyRng) -> PyResult<(Vec<usize>, Vec<f64>, Vec<bool>)> {
        let (action, out) = self.inner.slot(&model.inner, &mut rng.inner).map_err(to_py)?;
        Ok((action.choices().to_vec(), out.rewards, out.rewarded))
    }
}

#[pyfunction]
fn omega0(gamma: f64) -> PyResult<f64> {
    tow::omega0(gamma).map_err(to_py)
}

#[pyfunction]
fn omega0_multi(probs: Vec<f64>, users: usize) -> PyResult<f64> {
    tow::omega0_multi(&probs, users).map_err(to_py)
}

/// Full payoff tensor as `(action, payoffs)` pairs.
#[pyfunction]
#[pyo3(signature = (probs, users, collision_mode = "coin-lottery"))]
fn payoff_tensor(probs: Vec<f64>, users: usize, collision_mode: &str) -> PyResult<Vec<(Vec<usize>, Vec<f64>)>> {
    let model = tow_bombe::ChannelModel::new(probs, collision_mode.parse().map_err(to_py)?).map_err(to_py)?;
    let tensor = oracle::build_tensor(&model, users).map_err(to_py)?;
    Ok(tensor.iter().map(|(a, p)| (a.choices().to_vec(), p.to_vec())).collect())
}

/// Social maxima, their total, and pure Nash equilibria.
#[pyfunction]
fn solve_game<'py>(py: Python<'py>, probs: Vec<f64>, users: usize) -> PyResult<Bound<'py, PyDict>> {
    let model = tow_bombe::ChannelModel::new(probs, Default::default()).map_err(to_py)?;
    let solution = oracle::solve(&oracle::build_tensor(&model, users).map_err(to_py)?);
    let actions = |v: &[tow_bombe::JointAction]| -> Vec<Vec<usize>> { v.iter().map(|a| a.choices().to_vec()).collect() };
    let d = PyDict::new(py);
    d.set_item("social_maxima", actions(&solution.social_maxima))?;
    d.set_item("sm_value", solution.sm_value)?;
    d.set_item("nash_equilibria", actions(&solution.nash_equilibria))?;
    Ok(d)
}

/// The bundled reference configuration as TOML text.
#[pyfunction]
fn reference_config() -> &'static str {
    tow_bombe::harness::REFERENCE_CONFIG_TOML
}

/// Runs a Monte Carlo experiment. Starts from `config` (TOML text) or the
/// reference configuration and applies any keyword overrides.
#[pyfunction]
#[pyo3(signature = (config = None, *, policy = None, samples = None, horizon = None, seed = None,
                    probs = None, users = None, omega = None, amplitude = None, threads = None))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    config: Option<&str>,
    policy: Option<&str>,
    samples: Option<usize>,
    horizon: Option<usize>,
    seed: Option<u64>,
    probs: Option<Vec<f64>>,
    users: Option<usize>,
    omega: Option<f64>,
    amplitude: Option<f64>,
    threads: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut c = match config {
        Some(text) => ExperimentConfig::from_toml(text).map_err(to_py)?,
        None => ExperimentConfig::reference(),
    };
    if let Some(p) = policy {
        c.policy = p.parse::<PolicyKind>().map_err(to_py)?;
    }
    c.samples = samples.unwrap_or(c.samples);
    c.horizon = horizon.unwrap_or(c.horizon);
    c.seed = seed.unwrap_or(c.seed);
    c.probs = probs.unwrap_or(c.probs);
    c.users = users.unwrap_or(c.users);
    c.omega = omega.unwrap_or(c.omega);
    c.amplitude = amplitude.unwrap_or(c.amplitude);
    c.threads = threads.unwrap_or(c.threads);

    let (records, summary) = py
        .detach(|| -> tow_bombe::Result<_> {
            let records = run_samples(&c)?;
            let anchors = Anchors::for_config(&c)?;
            let summary = RunSummary::new(&records, anchors.as_ref(), c.cluster_radius)?;
            Ok((records, summary))
        })
        .map_err(to_py)?;

    let d = PyDict::new(py);
    d.set_item("scores", records.iter().map(|r| r.scores.clone()).collect::<Vec<_>>())?;
    d.set_item("mean_per_user", summary.mean_per_user.clone())?;
    d.set_item("mean_total", summary.mean_total)?;
    d.set_item("sm_fraction", summary.sm_fraction())?;
    d.set_item("ne_fraction", summary.ne_fraction())?;
    d.set_item("cluster_counts", summary.classification.cluster_counts.clone())?;
    d.set_item("config", c.to_toml())?;
    Ok(d)
}

#[pymodule]
fn tow_bombe_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRng>()?;
    m.add_class::<PyChannelModel>()?;
    m.add_class::<PyTowState>()?;
    m.add_class::<PyBombe>()?;
    m.add_function(wrap_pyfunction!(omega0, m)?)?;
    m.add_function(wrap_pyfunction!(omega0_multi, m)?)?;
    m.add_function(wrap_pyfunction!(payoff_tensor, m)?)?;
    m.add_function(wrap_pyfunction!(solve_game, m)?)?;
    m.add_function(wrap_pyfunction!(reference_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pyo3::types::PyModule;

    fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyModule>)>(f: F) {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "tow_bombe_py").unwrap();
            tow_bombe_py(&m).unwrap();
            f(py, &m);
        });
    }

    #[test]
    fn exposes_the_main_operations() {
        with_module(|py, m| {
            let locals = PyDict::new(py);
            locals.set_item("tb", m).unwrap();
            py.run(
                c"
model = tb.ChannelModel([0.03, 0.05, 0.1, 0.2, 0.9])
assert model.expected_payoff([4, 4, 4]) == [0.3, 0.3, 0.3]
assert abs(tb.omega0_multi(model.probs, 3) - 0.15 / 1.85) < 1e-12
g = tb.solve_game(model.probs, 3)
assert len(g['social_maxima']) == 6 and [4, 4, 4] in g['nash_equilibria']
b = tb.Bombe(3, 5, 0.08)
rng = tb.Rng(1)
for _ in range(50):
    b.step(model, rng)
assert b.t == 50
assert all(abs(sum(row)) < 1e-9 for row in b.heights())
s = tb.TowState(0.08)
s.update('A', False)
assert abs(s.q_estimate('A') + 0.08) < 1e-15
",
                None,
                Some(&locals),
            )
            .unwrap();
        });
    }

    #[test]
    fn errors_become_python_exceptions() {
        with_module(|py, m| {
            let err = m.getattr("omega0").unwrap().call1((2.5,)).unwrap_err();
            assert!(err.is_instance_of::<PyValueError>(py));
            let err = m
                .getattr("payoff_tensor")
                .unwrap()
                .call1((vec![0.5; 10], 40usize))
                .unwrap_err();
            assert!(err.is_instance_of::<PyMemoryError>(py));
            let err = m.getattr("Bombe").unwrap().call1((1usize, 5usize, 0.1)).unwrap_err();
            assert!(err.is_instance_of::<PyValueError>(py));
        });
    }

    #[test]
    fn experiment_runner_returns_summary() {
        with_module(|py, m| {
            let kwargs = PyDict::new(py);
            kwargs.set_item("samples", 20).unwrap();
            kwargs.set_item("threads", 1).unwrap();
            let d = m.getattr("run_experiment").unwrap().call((), Some(&kwargs)).unwrap();
            let scores: Vec<Vec<f64>> = d.get_item("scores").unwrap().extract().unwrap();
            assert_eq!(scores.len(), 20);
            let total: f64 = d.get_item("mean_total").unwrap().extract().unwrap();
            assert!(total > 1000.0);
        });
    }
}
