//! Python bindings. Complex vectors are lists of Python `complex`; channel
//! matrices are lists of rows.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use prss::montecarlo::{self, Detector, ExperimentConfig, Measurement, NoiseAxis, Scheme, SweepRecord};
use prss::{CMatrix, DualSlotObservation, OffsetSign};

fn err(e: prss::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("channel must be a non-empty list of equal-length rows"));
    }
    Ok(CMatrix::from_fn(m, n, |i, k| rows[i][k]))
}

// Vec<u8> would surface as `bytes`; bits read better as a list of ints.
fn bit_list(bits: Vec<u8>) -> Vec<u32> {
    bits.into_iter().map(u32::from).collect()
}

/// Square Gray-labelled QAM constellation with unit average energy.
#[pyclass(name = "Constellation", frozen)]
struct PyConstellation(prss::Constellation);

#[pymethods]
impl PyConstellation {
    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    #[getter]
    fn bits_per_symbol(&self) -> usize {
        self.0.bits_per_symbol()
    }

    fn points(&self) -> Vec<Complex64> {
        self.0.points().to_vec()
    }

    fn label(&self, index: usize) -> PyResult<Vec<u32>> {
        if index >= self.0.order() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(bit_list(self.0.label(index)))
    }

    fn __repr__(&self) -> String {
        format!("Constellation(order={})", self.0.order())
    }
}

#[pyfunction]
fn make_qam(order: usize) -> PyResult<PyConstellation> {
    prss::make_qam(order).map(PyConstellation).map_err(err)
}

#[pyfunction]
fn modulate(bits: Vec<u8>, c: &PyConstellation) -> PyResult<Vec<Complex64>> {
    prss::modulate(&bits, &c.0).map_err(err)
}

#[pyfunction]
fn quantize(v: Vec<Complex64>, c: &PyConstellation) -> Vec<Complex64> {
    prss::quantize(&v, &c.0)
}

#[pyfunction]
fn demap(symbols: Vec<Complex64>, c: &PyConstellation) -> PyResult<Vec<u32>> {
    prss::demap(&symbols, &c.0).map(bit_list).map_err(err)
}

/// `|Hx + v + r|` for one slot.
#[pyfunction]
fn observe_single(h: Vec<Vec<Complex64>>, x: Vec<Complex64>, r: Vec<Complex64>, v: Vec<Complex64>) -> PyResult<Vec<f64>> {
    prss::observe_single(&matrix(h)?, &x, &r, &v).map_err(err)
}

/// Both slot readings `(z1, z2)`.
#[pyfunction]
fn observe_prss(
    h: Vec<Vec<Complex64>>,
    x: Vec<Complex64>,
    r: Vec<Complex64>,
    v1: Vec<Complex64>,
    v2: Vec<Complex64>,
    phi: f64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let z = prss::observe_prss(&matrix(h)?, &x, &r, &v1, &v2, phi).map_err(err)?;
    Ok((z.z1, z.z2))
}

/// Estimate of `Hx` from two readings taken at offset `phi`.
#[pyfunction]
fn reconstruct(z1: Vec<f64>, z2: Vec<f64>, r: Vec<Complex64>, phi: f64) -> PyResult<Vec<Complex64>> {
    let z = DualSlotObservation { z1, z2, phi };
    Ok(prss::reconstruct_general(&z, &r, phi).map_err(err)?.s_hat)
}

/// Closed form for `phi = sign·π/2`.
#[pyfunction]
fn reconstruct_optimal(z1: Vec<f64>, z2: Vec<f64>, r: Vec<Complex64>, sign: i32) -> PyResult<Vec<Complex64>> {
    let sign = OffsetSign::from_sign(sign).map_err(err)?;
    let z = DualSlotObservation { z1, z2, phi: sign.phi() };
    Ok(prss::reconstruct_optimal(&z, &r, sign).map_err(err)?.s_hat)
}

type Detection = (Vec<usize>, Vec<Complex64>, f64);

fn detection(d: prss::DetectionResult) -> Detection {
    (d.indices, d.x_hat, d.metric)
}

/// Exhaustive ML on the linear model; returns `(indices, symbols, metric)`.
#[pyfunction]
fn ml(s_hat: Vec<Complex64>, h: Vec<Vec<Complex64>>, c: &PyConstellation) -> PyResult<Detection> {
    prss::ml_linear(&s_hat, &matrix(h)?, &c.0).map(detection).map_err(err)
}

#[pyfunction]
fn zf(s_hat: Vec<Complex64>, h: Vec<Vec<Complex64>>, c: &PyConstellation) -> PyResult<Detection> {
    prss::zf_linear(&s_hat, &matrix(h)?, &c.0).map(detection).map_err(err)
}

/// Exhaustive ML on one amplitude reading.
#[pyfunction]
fn ml_single_shot(z: Vec<f64>, h: Vec<Vec<Complex64>>, r: Vec<Complex64>, c: &PyConstellation) -> PyResult<Detection> {
    prss::ml_single_shot(&z, &matrix(h)?, &r, &c.0).map(detection).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (phi, u_mod = 1.0))]
fn predicted_trace(phi: f64, u_mod: f64) -> PyResult<f64> {
    prss::predicted_trace(phi, u_mod).map_err(err)
}

#[pyfunction]
fn predicted_mse(phi: f64, sigma_v_sq: f64) -> PyResult<f64> {
    prss::predicted_mse(phi, sigma_v_sq).map_err(err)
}

#[allow(clippy::too_many_arguments)]
fn config(
    m: usize,
    n: usize,
    rsr_db: Vec<f64>,
    snr_db: Option<Vec<f64>>,
    sigma_v_sq: Option<Vec<f64>>,
    phi: Vec<f64>,
    scheme: &str,
    detector: &str,
    qam: Option<usize>,
    trials: u64,
    target_errors: Option<u64>,
    seed: u64,
    threads: usize,
) -> PyResult<ExperimentConfig> {
    let noise = match (snr_db, sigma_v_sq) {
        (Some(s), None) => NoiseAxis::SnrDb(s),
        (None, Some(v)) => NoiseAxis::SigmaVSq(v),
        _ => return Err(PyValueError::new_err("give exactly one of snr_db or sigma_v_sq")),
    };
    Ok(ExperimentConfig {
        m,
        n,
        rsr_db,
        noise,
        phi,
        scheme: Scheme::parse(scheme).map_err(err)?,
        detector: Detector::parse(detector).map_err(err)?,
        qam,
        max_trials: trials,
        target_errors,
        master_seed: seed,
        threads,
    })
}

fn records<'py>(py: Python<'py>, recs: Vec<SweepRecord>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    recs.into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("scheme", r.scheme.name())?;
            d.set_item("detector", r.detector.name())?;
            d.set_item("m", r.m)?;
            d.set_item("n", r.n)?;
            d.set_item("qam", r.qam)?;
            d.set_item("rsr_db", r.rsr_db)?;
            d.set_item("snr_db", r.snr_db)?;
            d.set_item("sigma_v_sq", r.sigma_v_sq)?;
            d.set_item("phi", r.phi)?;
            d.set_item("trials", r.trials)?;
            d.set_item("seed", r.seed)?;
            match r.measurement {
                Measurement::Ber(b) => {
                    d.set_item("bit_errors", b.bit_errors)?;
                    d.set_item("bits_total", b.bits_total)?;
                    d.set_item("ber", b.ber)?;
                    d.set_item("ci95", b.half_width_95)?;
                }
                Measurement::NoiseVariance { sigma_ve_sq, receiver_samples } => {
                    d.set_item("sigma_ve_sq", sigma_ve_sq)?;
                    d.set_item("samples", receiver_samples)?;
                }
            }
            Ok(d)
        })
        .collect()
}

/// BER over `rsr_db × snr_db` (or `sigma_v_sq`); one dict per point.
#[pyfunction]
#[pyo3(signature = (m, n, rsr_db, snr_db = None, sigma_v_sq = None, scheme = "prss", detector = "ml",
    phi = std::f64::consts::FRAC_PI_2, qam = None, trials = 100_000, target_errors = Some(200), seed = 1, threads = 0))]
#[allow(clippy::too_many_arguments)]
fn ber_sweep<'py>(
    py: Python<'py>,
    m: usize,
    n: usize,
    rsr_db: Vec<f64>,
    snr_db: Option<Vec<f64>>,
    sigma_v_sq: Option<Vec<f64>>,
    scheme: &str,
    detector: &str,
    phi: f64,
    qam: Option<usize>,
    trials: u64,
    target_errors: Option<u64>,
    seed: u64,
    threads: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config(m, n, rsr_db, snr_db, sigma_v_sq, vec![phi], scheme, detector, qam, trials, target_errors, seed, threads)?;
    let recs = py.detach(|| montecarlo::run_ber_sweep(&cfg)).map_err(err)?;
    records(py, recs)
}

/// Effective noise variance over `sigma_v_sq × phi` at `rsr_db`.
#[pyfunction]
#[pyo3(signature = (phi, sigma_v_sq, rsr_db = 30.0, m = 16, n = 1, trials = 10_000, seed = 1, threads = 0))]
#[allow(clippy::too_many_arguments)]
fn phi_sweep<'py>(
    py: Python<'py>,
    phi: Vec<f64>,
    sigma_v_sq: Vec<f64>,
    rsr_db: f64,
    m: usize,
    n: usize,
    trials: u64,
    seed: u64,
    threads: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config(m, n, vec![rsr_db], None, Some(sigma_v_sq), phi, "prss", "ml", None, trials, None, seed, threads)?;
    let recs = py.detach(|| montecarlo::run_phi_sweep(&cfg)).map_err(err)?;
    records(py, recs)
}

/// Effective noise variance at φ = π/2 over `sigma_v_sq × rsr_db`.
#[pyfunction]
#[pyo3(signature = (rsr_db, sigma_v_sq, m = 16, n = 1, trials = 10_000, seed = 1, threads = 0))]
#[allow(clippy::too_many_arguments)]
fn rsr_sweep<'py>(
    py: Python<'py>,
    rsr_db: Vec<f64>,
    sigma_v_sq: Vec<f64>,
    m: usize,
    n: usize,
    trials: u64,
    seed: u64,
    threads: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config(
        m,
        n,
        rsr_db,
        None,
        Some(sigma_v_sq),
        vec![std::f64::consts::FRAC_PI_2],
        "prss",
        "ml",
        None,
        trials,
        None,
        seed,
        threads,
    )?;
    let recs = py.detach(|| montecarlo::run_rsr_sweep(&cfg)).map_err(err)?;
    records(py, recs)
}

#[pymodule]
fn prss_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConstellation>()?;
    m.add_function(wrap_pyfunction!(make_qam, m)?)?;
    m.add_function(wrap_pyfunction!(modulate, m)?)?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(demap, m)?)?;
    m.add_function(wrap_pyfunction!(observe_single, m)?)?;
    m.add_function(wrap_pyfunction!(observe_prss, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_optimal, m)?)?;
    m.add_function(wrap_pyfunction!(ml, m)?)?;
    m.add_function(wrap_pyfunction!(zf, m)?)?;
    m.add_function(wrap_pyfunction!(ml_single_shot, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_trace, m)?)?;
    m.add_function(wrap_pyfunction!(predicted_mse, m)?)?;
    m.add_function(wrap_pyfunction!(ber_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(phi_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(rsr_sweep, m)?)?;
    Ok(())
}
