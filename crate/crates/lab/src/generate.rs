//! Seeded generators for test operators, functionals and random matrices.
//! Every consumer draws from its own ChaCha stream so adding a stage never
//! shifts the numbers another stage sees.

use commutant_core::functionals::{FunctionalSpec, TailState, TailStateSpec, TracePart, WeightedTail};
use commutant_core::gauges::GaugeSpec;
use commutant_core::idealops::Operator;
use commutant_core::linalg;
use commutant_core::{CMatrix, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{FunctionalConfig, MatrixConfig, TailConfig, TailKind, TestKind, TestSetConfig};

pub const STREAM_GAUGE_CHECK: u64 = 1;
pub const STREAM_TEST_SET: u64 = 2;
pub const STREAM_FUNCTIONALS: u64 = 1000;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn complex_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let m = complex_matrix(rng, n, n);
    (&m + m.adjoint()).unscale(2.0)
}

/// Unitary factor of the QR decomposition of a random matrix.
pub fn unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    complex_matrix(rng, n, n).qr().q()
}

/// Random density matrix `H H* / tr(H H*)`.
pub fn density(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let h = complex_matrix(rng, n, n);
    let rho = &h * h.adjoint();
    let tr = linalg::trace(&rho).re;
    let rho = rho.unscale(tr);
    // exact hermitian symmetry for the validation in TailStateSpec
    (&rho + rho.adjoint()).unscale(2.0)
}

pub fn test_operator(rng: &mut ChaCha8Rng, kind: TestKind, size: usize) -> Operator {
    match kind {
        TestKind::RandomHermitian => Operator::finite(hermitian(rng, size)),
        TestKind::FinitelySupported => Operator::finite(complex_matrix(rng, size, size)),
        TestKind::Banded => {
            let band = 2usize;
            let block = CMatrix::from_fn(size, size, |i, j| {
                if i.abs_diff(j) <= band {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let c = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
            Operator::scalar(c).with_finite(block)
        }
    }
}

pub fn test_set(config: &TestSetConfig, experiment_seed: u64) -> Vec<Operator> {
    let mut rng = stream(config.seed.unwrap_or(experiment_seed), STREAM_TEST_SET);
    (0..config.count)
        .map(|_| test_operator(&mut rng, config.kind, config.size))
        .collect()
}

pub fn matrix(rng: &mut ChaCha8Rng, config: &MatrixConfig) -> CMatrix {
    let mut m = if config.random {
        complex_matrix(rng, config.size, config.size).scale(config.scale)
    } else {
        CMatrix::zeros(config.size, config.size)
    };
    for e in &config.entries {
        m[(e.row, e.col)] += Complex64::new(e.re, e.im);
    }
    m
}

fn tail(rng: &mut ChaCha8Rng, config: &TailConfig) -> Result<WeightedTail, commutant_core::Error> {
    let state = match config.state {
        TailKind::Coordinate => TailState::Coordinate,
        TailKind::Uniform => TailState::Uniform,
        TailKind::Random => TailState::Fixed(density(rng, config.width)),
    };
    Ok(WeightedTail {
        weight: Complex64::new(config.weight[0], config.weight[1]),
        tail: TailStateSpec::new(config.first, config.stride, config.width, state, config.rule.into())?,
    })
}

/// Builds the `index`-th configured functional; random entries come from a
/// stream tied to the experiment seed and the index.
pub fn functional(
    config: &FunctionalConfig,
    index: usize,
    gauge: &GaugeSpec,
    seed: u64,
) -> Result<FunctionalSpec, commutant_core::Error> {
    let mut rng = stream(seed, STREAM_FUNCTIONALS + index as u64);
    let trace_part = match &config.trace {
        Some(t) => {
            let x = matrix(&mut rng, &t.x);
            let ys = t.ys.iter().map(|y| matrix(&mut rng, y)).collect();
            Some(TracePart::new(x, ys, gauge.clone())?)
        }
        None => None,
    };
    let tails = config
        .tails
        .iter()
        .map(|t| tail(&mut rng, t))
        .collect::<Result<Vec<_>, _>>()?;
    FunctionalSpec::new(trace_part, tails)
}

/// Random functional with a trace part on leading blocks of the given sizes
/// and `tails` random tail states; used by seeded batch checks.
pub fn random_functional(
    rng: &mut ChaCha8Rng,
    gauge: &GaugeSpec,
    arity: usize,
    x_size: usize,
    y_size: usize,
    tails: usize,
) -> Result<FunctionalSpec, commutant_core::Error> {
    let trace_part = if x_size + y_size > 0 {
        let x = complex_matrix(rng, x_size, x_size).unscale(x_size.max(1) as f64);
        let ys = if y_size > 0 {
            (0..arity)
                .map(|_| complex_matrix(rng, y_size, y_size).unscale(y_size as f64))
                .collect()
        } else {
            Vec::new()
        };
        Some(TracePart::new(x, ys, gauge.clone())?)
    } else {
        None
    };
    let tails = (0..tails)
        .map(|_| {
            let width = rng.random_range(1..4);
            let config = TailConfig {
                weight: [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                first: rng.random_range(0..20),
                stride: rng.random_range(1..4),
                width,
                state: TailKind::Random,
                rule: Default::default(),
            };
            tail(rng, &config)
        })
        .collect::<Result<Vec<_>, _>>()?;
    FunctionalSpec::new(trace_part, tails)
}
