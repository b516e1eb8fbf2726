//! Seeded experiment suites behind every `crlab` command.
//!
//! Each trial draws from its own random substream derived from the master
//! seed and the trial index, so results do not depend on execution order
//! and any single trial can be replayed alone. Numeric failures inside a
//! trial become failing records; they never abort the batch.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crlab_core::diagonal::{WeightedHardySpace, PICK_COEFF_TOL};
use crlab_core::factorization::{
    factor_at_origin, leech_factor, verify_leech_postconditions, CONTRACTIVITY_SLACK,
    FACTOR_RESIDUAL_TOL,
};
use crlab_core::interpolation::{
    carleson_constant, extreme_witness, interpolation_operator, quadratic_perturbation_norms,
    weak_separation_constant, WITNESS_THRESHOLD,
};
use crlab_core::kernels::{sample_ball_points, BallPoint, FiniteKernelSpace, KernelModel};
use crlab_core::linalg::{max_abs_entry, operator_norm, CMatrix, HermitianMatrix, DEFAULT_PSD_TOL};
use crlab_core::moebius::{column_mobius_eval, psd_sqrt, BallAutomorphism};
use crlab_core::multipliers::{
    multiplier_norm, multiply, pick_feasible, random_contractive_column,
    random_contractive_column_pair, reshape_column_to_matrix, MultiplierTable,
    DEFAULT_BISECTION_TOL,
};
use crlab_core::Result;

use crate::config::{Command, ExperimentConfig};
use crate::report::{RunReport, TrialRecord};

/// Residual budget for exact-arithmetic identities (Moebius kernel and
/// defect identities).
pub const IDENTITY_RESIDUAL_TOL: f64 = 1e-10;
/// Budget for closed forms checked against exact expected values.
pub const CLOSED_FORM_TOL: f64 = 1e-12;
/// Budget for the origin-factorization norm equality.
pub const ORIGIN_NORM_EQUALITY_TOL: f64 = 1e-6;
/// Budget for the Carleson-constant cross check.
pub const CARLESON_CROSS_TOL: f64 = 1e-10;
/// Budget for the weak-separation closed form vs the bisection oracle.
pub const WEAK_SEPARATION_ORACLE_TOL: f64 = 1e-8;
/// Upper slack for the row-column example windows: restriction norms sit
/// below the full-space values, and the bisection adds at most its own
/// tolerance on top.
pub const EXAMPLE_UPPER_SLACK: f64 = 1e-8;
/// Pinned lower bound for the column norm of the (z1, z2)/sqrt(2) example
/// on [`row_column_example_points`]. A pilot run of this exact
/// deterministic configuration measured 0.999133914039 (the full-space
/// value is 1, approached from below); pinned rounded down at the sixth
/// decimal.
pub const EXAMPLE_COLUMN_LOWER: f64 = 0.999133;
/// Pinned lower bound for the row norm of the same example. The pilot run
/// measured 0.707106781213 (the full-space value is `1/sqrt(2)`, already
/// attained at this configuration up to bisection rounding); pinned
/// rounded down at the sixth decimal.
pub const EXAMPLE_ROW_LOWER: f64 = 0.707106;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent random substream for one trial of one run.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    let mixed = splitmix64(splitmix64(seed) ^ trial);
    ChaCha12Rng::seed_from_u64(mixed)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn metrics(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect()
}

/// Runs the configured command to completion and assembles its report.
pub fn run_command(config: &ExperimentConfig) -> RunReport {
    let start = Instant::now();
    let records = match config.command {
        Command::VerifyColumnRow => suite_column_row(config),
        Command::VerifyColumnMatrix => suite_column_matrix(config),
        Command::VerifyPairs => suite_pairs(config),
        Command::LeechCheck => suite_leech(config),
        Command::MoebiusIdentities => suite_moebius(config),
        Command::ReproduceExampleRowColumn => reproduce_example_row_column(config),
        Command::ReproduceMatrixUnits => reproduce_matrix_units(config),
        Command::ReproduceAlpha => reproduce_alpha(config),
        Command::ReproduceExtreme => reproduce_extreme(config),
        Command::ReproduceInterpolation => reproduce_interpolation(config),
        Command::SweepPowerKernel => sweep_power_kernel(config),
    };
    let mut report = RunReport::assemble(config.clone(), records);
    report.wall_time_s = start.elapsed().as_secs_f64();
    report
}

/// Folds a fallible trial body into records; errors become one failing
/// record under `check`.
fn catch_trial(
    records: &mut Vec<TrialRecord>,
    trial: usize,
    check: &str,
    budget: f64,
    body: impl FnOnce() -> Result<Vec<TrialRecord>>,
) {
    match body() {
        Ok(mut r) => records.append(&mut r),
        Err(e) => records.push(TrialRecord::failed(trial, check, budget, &e.to_string())),
    }
}

fn da_space<R: Rng>(d: usize, n: usize, rng: &mut R) -> Result<FiniteKernelSpace> {
    let pts = sample_ball_points(d, n, 0.85, 0.05, rng)?;
    FiniteKernelSpace::new(KernelModel::DruryArveson { dim: d }, pts)
}

fn suite_column_row(cfg: &ExperimentConfig) -> Vec<TrialRecord> {
    let mut records = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let mut rng = trial_rng(cfg.seed, trial as u64);
        catch_trial(&mut records, trial, "row-minus-column", cfg.tol, || {
            let d = rng.gen_range(1..=cfg.d);
            let n = rng.gen_range(1..=cfg.n);
            let big_n = rng.gen_range(1..=cfg.big_n);
            let space = da_space(d, n, &mut rng)?;
            let margin = rng.gen_range(0.2..=1.0);
            let column = random_contractive_column(&space, big_n, margin, &mut rng)?;
            let column_norm = multiplier_norm(&space, &space, &column, DEFAULT_BISECTION_TOL)?;
            let row_norm =
                multiplier_norm(&space, &space, &column.transpose(), DEFAULT_BISECTION_TOL)?;
            Ok(vec![TrialRecord::measured(
                trial,
                "row-minus-column",
                format!("d={d} n={n} N={big_n}"),
                metrics(&[("column_norm", column_norm), ("row_norm", row_norm)]),
                row_norm - column_norm,
                cfg.tol,
            )])
        });
    }
    records
}

fn suite_column_matrix(cfg: &ExperimentConfig) -> Vec<TrialRecord> {
    // All reshape shapes M x N with M*N bounded by the configured column
    // length.
    let shapes: Vec<(usize, usize)> = (1..=cfg.big_n)
        .flat_map(|m| (1..=cfg.big_n / m).map(move |k| (m, k)))
        .collect();
    let mut records = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let mut rng = trial_rng(cfg.seed, trial as u64);
        catch_trial(&mut records, trial, "matrix-minus-column", cfg.tol, || {
            let d = rng.gen_range(1..=cfg.d);
            let n = rng.gen_range(1..=cfg.n);
            let (m, k) = shapes[rng.gen_range(0..shapes.len())];
            let space = da_space(d, n, &mut rng)?;
            let margin = rng.gen_range(0.2..=1.0);
            let column = random_contractive_column(&space, m * k, margin, &mut rng)?;
            let column_norm = multiplier_norm(&space, &space, &column, DEFAULT_BISECTION_TOL)?;
            let matrix = reshape_column_to_matrix(&column, m, k)?;
            let matrix_norm = multiplier_norm(&space, &space, &matrix, DEFAULT_BISECTION_TOL)?;
            Ok(vec![TrialRecord::measured(
                trial,
                "matrix-minus-column",
                format!("d={d} n={n} M={m} N={k}"),
                metrics(&[("column_norm", column_norm), ("matrix_norm", matrix_norm)]),
                matrix_norm - column_norm,
                cfg.tol,
            )])
        });
    }
    records
}

fn suite_pairs(cfg: &ExperimentConfig) -> Vec<TrialRecord> {
    let mut records = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let mut rng = trial_rng(cfg.seed, trial as u64);
        catch_trial(&mut records, trial, "row-minus-column", cfg.tol, || {
            let n = rng.gen_range(1..=cfg.n);
            let big_n = rng.gen_range(1..=cfg.big_n);
            let pts = sample_ball_points(1, n, 0.8, 0.05, &mut rng)?;
            let src = FiniteKernelSpace::new(KernelModel::DruryArveson { dim: 1 }, pts.clone())?;
            let dst = FiniteKernelSpace::new(
                KernelModel::PowerKernel {
                    dim: 1,
                    exponent: 2.0,
                },
                pts,
            )?;
            let margin = rng.gen_range(0.2..=1.0);
            let column = random_contractive_column_pair(&src, &dst, big_n, margin, &mut rng)?;
            let column_norm = multiplier_norm(&src, &dst, &column, DEFAULT_BISECTION_TOL)?;
            let row_norm =
                multiplier_norm(&src, &dst, &column.transpose(), DEFAULT_BISECTION_TOL)?;
            Ok(vec![TrialRecord::measured(
                trial,
                "row-minus-column",
                format!("szego->szego^2 n={n} N={big_n}"),
                metrics(&[("column_norm", column_norm), ("row_norm", row_norm)]),
                row_norm - column_norm,
                cfg.tol,
            )])
        });
    }
    records
}

fn random_table<R: Rng>(n: usize, q: usize, p: usize, scale: f64, rng: &mut R) -> MultiplierTable {
    MultiplierTable::new(
        (0..n)
            .map(|_| {
                CMatrix::from_fn(q, p, |_, _| {
                    c(
                        scale * rng.sample::<f64, _>(StandardNormal),
                        scale * rng.sample::<f64, _>(StandardNormal),
                    )
                })
            })
            .collect(),
    )
    .expect("random tables are well formed")
}

fn suite_leech(cfg: &ExperimentConfig) -> Vec<TrialRecord> {
    let mut records = Vec::with_capacity(4 * cfg.trials);
    for trial in 0..cfg.trials {
        let mut rng = trial_rng(cfg.seed, trial as u64);
        // Engineered factorization instance: Phi = Theta Psi0 with Psi0 a
        // strictly contractive column makes the Leech hypothesis hold with
        // margin; the computed factor must reproduce Phi and stay
        // contractive.
        catch_trial(&mut records, trial, "leech-residual", FACTOR_RESIDUAL_TOL, || {
            let d = rng.gen_range(1..=cfg.d);
            let n = rng.gen_range(1..=cfg.n);
            let q = rng.gen_range(1..=cfg.big_n);
            let p = rng.gen_range(1..=cfg.big_n);
            let pts = sample_ball_points(d, n, 0.75, 0.1, &mut rng)?;
            let space = FiniteKernelSpace::new(KernelModel::DruryArveson { dim: d }, pts)?;
            let theta = random_table(n, q, p, 0.8, &mut rng);
            let margin = rng.gen_range(0.3..=0.9);
            let psi0 = random_contractive_column(&space, p, margin, &mut rng)?;
            let phi = multiply(&theta, &psi0)?;
            let out = leech_factor(&space, &theta, &phi, DEFAULT_PSD_TOL)?;
            let (residual, _) = verify_leech_postconditions(&space, &theta, &phi, &out)?;
            let psi_norm = multiplier_norm(&space, &space, &out.psi, DEFAULT_BISECTION_TOL)?;
            let detail = format!("d={d} n={n} q={q} p={p}");
            Ok(vec![
                TrialRecord::measured(
                    trial,
                    "leech-residual",
                    detail.clone(),
                    metrics(&[("residual", residual)]),
                    residual,
                    FACTOR_RESIDUAL_TOL,
                ),
                TrialRecord::measured(
                    trial,
                    "leech-psi-contractivity",
                    detail,
                    metrics(&[("psi_norm", psi_norm)]),
                    psi_norm - 1.0,
                    CONTRACTIVITY_SLACK,
                ),
            ])
        });
        // Origin factorization instance: a column vanishing at 0 factors
        // through the coordinate row with equal norm.
        catch_trial(&mut records, trial, "origin-residual", FACTOR_RESIDUAL_TOL, || {
            let d = rng.gen_range(1..=cfg.d);
            let n = rng.gen_range(2..=cfg.n.max(2));
            let big_n = rng.gen_range(1..=cfg.big_n);
            let mut pts = vec![BallPoint::origin(d)];
            pts.extend(sample_ball_points(d, n - 1, 0.75, 0.1, &mut rng)?);
            let space = FiniteKernelSpace::new(KernelModel::DruryArveson { dim: d }, pts)?;
            let raw = random_contractive_column(&space, big_n, 1.0, &mut rng)?;
            let mut values = raw.values().to_vec();
            values[0] = CMatrix::zeros(big_n, 1);
            let phi = MultiplierTable::new(values)?;
            let out = factor_at_origin(&space, &phi, DEFAULT_PSD_TOL)?;
            let equality = (out.factor_norm - out.column_norm).abs();
            let detail = format!("d={d} n={n} N={big_n}");
            Ok(vec![
                TrialRecord::measured(
                    trial,
                    "origin-residual",
                    detail.clone(),
                    metrics(&[("residual", out.residual)]),
                    out.residual,
                    FACTOR_RESIDUAL_TOL,
                ),
                TrialRecord::measured(
                    trial,
                    "origin-norm-equality",
                    detail,
                    metrics(&[
                        ("column_norm", out.column_norm),
                        ("factor_norm", out.factor_norm),
                    ]),
                    equality,
                    ORIGIN_NORM_EQUALITY_TOL,
                ),
            ])
        });
    }
    records
}

fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    g.qr().q()
}

fn random_ball_column<R: Rng>(n: usize, radius: f64, rng: &mut R) -> CMatrix {
    loop {
        let v = CMatrix::from_fn(n, 1, |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = v.norm();
        if norm > 1e-9 {
            let r: f64 = rng.gen_range(0.0..radius);
            return v * c(r / norm, 0.0);
        }
    }
}

fn ball_point_from_column(v: &CMatrix) -> Result<BallPoint> {
    BallPoint::new((0..v.nrows()).map(|i| v[(i, 0)]).collect())
}

fn suite_moebius(cfg: &ExperimentConfig) -> Vec<TrialRecord> {
    let mut records = Vec::with_capacity(2 * cfg.d * cfg.trials);
    for d in 1..=cfg.d {
        for t in 0..cfg.trials {
            let trial = (d - 1) * cfg.trials + t;
            let mut rng = trial_rng(cfg.seed, ((d as u64) << 32) | t as u64);
            // Kernel identity for a generic automorphism theta with
            // alpha = theta^{-1}(0):
            //   1 - <theta(z), theta(w)> =
            //     (1 - <alpha,alpha>)(1 - <z,w>)
            //       / ((1 - <z,alpha>)(1 - <alpha,w>)).
            catch_trial(&mut records, trial, "kernel-identity", IDENTITY_RESIDUAL_TOL, || {
                let a = ball_point_from_column(&random_ball_column(d, 0.8, &mut rng))?;
                let u = random_unitary(d, &mut rng);
                let theta = BallAutomorphism::new(a, u)?;
                let alpha = theta.inverse_eval(&BallPoint::origin(d))?;
                let z = ball_point_from_column(&random_ball_column(d, 0.8, &mut rng))?;
                let w = ball_point_from_column(&random_ball_column(d, 0.8, &mut rng))?;
                let tz = theta.eval(&z)?;
                let tw = theta.eval(&w)?;
                let one = c(1.0, 0.0);
                let lhs = one - tz.inner(&tw);
                let rhs = (one - alpha.inner(&alpha)) * (one - z.inner(&w))
                    / ((one - z.inner(&alpha)) * (one - alpha.inner(&w)));
                let residual = (lhs - rhs).norm();
                Ok(vec![TrialRecord::measured(
                    trial,
                    "kernel-identity",
                    format!("d={d}"),
                    metrics(&[("residual", residual)]),
                    residual,
                    IDENTITY_RESIDUAL_TOL,
                )])
            });
            // Column defect identity:
            //   I - theta(Z) theta(W)* =
            //     (I-aa*)^{1/2} (I-Za*)^{-1} (I-ZW*) (I-aW*)^{-1} (I-aa*)^{1/2}.
            catch_trial(
                &mut records,
                trial,
                "column-defect-identity",
                IDENTITY_RESIDUAL_TOL,
                || {
                    let a = random_ball_column(d, 0.8, &mut rng);
                    let z = random_ball_column(d, 0.8, &mut rng);
                    let w = random_ball_column(d, 0.8, &mut rng);
                    let id = CMatrix::identity(d, d);
                    let tz = column_mobius_eval(&a, &z)?;
                    let tw = column_mobius_eval(&a, &w)?;
                    let lhs = &id - &tz * tw.adjoint();
                    let sqrt = psd_sqrt(&HermitianMatrix::new(&id - &a * a.adjoint())?)?;
                    let inv_za = (&id - &z * a.adjoint())
                        .try_inverse()
                        .ok_or_else(|| crlab_core::Error::Numeric("singular I - Za*".into()))?;
                    let inv_aw = (&id - &a * w.adjoint())
                        .try_inverse()
                        .ok_or_else(|| crlab_core::Error::Numeric("singular I - aW*".into()))?;
                    let rhs = &sqrt * inv_za * (&id - &z * w.adjoint()) * inv_aw * &sqrt;
                    let residual = max_abs_entry(&(lhs - rhs));
                    Ok(vec![TrialRecord::measured(
                        trial,
                        "column-defect-identity",
                        format!("N={d}"),
                        metrics(&[("residual", residual)]),
                        residual,
                        IDENTITY_RESIDUAL_TOL,
                    )])
                },
            );
        }
    }
    records
}

/// The documented deterministic point set for the row-column example: the
/// origin followed by `count - 1` points of an outward low-discrepancy
/// spiral in the complex 2-ball. Point `k` has radius
/// `0.97 (k/(count-1))^{1/4}` (uniform in the 4-volume) and direction
/// `(cos(psi) e^{i th1}, sin(psi) e^{i th2})` driven by three irrational
/// rotations, so distinct indices give distinct points.
pub fn row_column_example_points(count: usize) -> Vec<BallPoint> {
    // Fractional parts of k times the golden-ratio conjugate, sqrt(2)-1,
    // and sqrt(3)-1.
    const G1: f64 = 0.618_033_988_749_894_9;
    const G2: f64 = 0.414_213_562_373_095_05;
    const G3: f64 = 0.732_050_807_568_877_3;
    let frac = |x: f64| x - x.floor();
    let tau = std::f64::consts::TAU;
    (0..count)
        .map(|k| {
            if k == 0 {
                return BallPoint::origin(2);
            }
            let u = k as f64 / (count - 1) as f64;
            let r = 0.97 * u.powf(0.25);
            let psi = std::f64::consts::FRAC_PI_2 * frac(k as f64 * G2);
            let th1 = tau * frac(k as f64 * G1);
            let th2 = tau * frac(k as f64 * G3);
            BallPoint::new(vec![
                Complex64::from_polar(r * psi.cos(), th1),
                Complex64::from_polar(r * psi.sin(), th2),
            ])
            .expect("spiral points lie in the open ball")
        })
        .collect()
}

fn reproduce_example_row_column(cfg: &ExperimentConfig) -> Vec<TrialRecord> {
    let mut records = Vec::new();
    catch_trial(&mut records, 0, "column-norm-window", 0.0, || {
        let pts = row_column_example_points(cfg.n);
        let space = FiniteKernelSpace::new(KernelModel::DruryArveson { dim: 2 }, pts.clone())?;
        // The column (z1, z2)/sqrt(2); its full-space column norm is 1 and
        // row norm is 1/sqrt(2), both approached from below by
        // restrictions.
        let s = 1.0 / 2.0f64.sqrt();
        let phi = MultiplierTable::new(
            pts.iter()
                .map(|p| CMatrix::from_fn(2, 1, |i, _| p.coords()[i] * s))
                .collect(),
        )?;
        let column_norm = multiplier_norm(&space, &space, &phi, DEFAULT_BISECTION_TOL)?;
        let row_norm = multiplier_norm(&space, &space, &phi.transpose(), DEFAULT_BISECTION_TOL)?;
        let column_upper = 1.0 + EXAMPLE_UPPER_SLACK;
        let row_upper = s + EXAMPLE_UPPER_SLACK;
        let detail = format!("n={} deterministic spiral", cfg.n);
        Ok(vec![
            TrialRecord::measured(
                0,
                "column-norm-window",
                detail.clone(),
                metrics(&[
                    ("column_norm", column_norm),
                    ("lower", EXAMPLE_COLUMN_LOWER),
                    ("upper", column_upper),
                ]),
                (EXAMPLE_COLUMN_LOWER - column_norm).max(column_norm - column_upper),
                0.0,
            ),
            TrialRecord::measured(
                0,
                "row-norm-window",
                detail,
                metrics(&[
                    ("row_norm", row_norm),
                    ("lower", EXAMPLE_ROW_LOWER),
                    ("upper", row_upper),
                ]),
                (EXAMPLE_ROW_LOWER - row_norm).max(row_norm - row_upper),
                0.0,
            ),
        ])
    });
    records
}

fn reproduce_matrix_units(_cfg: &ExperimentConfig) -> Vec<TrialRecord> {
    let mut records = Vec::new();
    catch_trial(&mut records, 0, "row-of-units", CLOSED_FORM_TOL, || {
        let s = 1.0 / 2.0f64.sqrt();
        let unit = |r: usize, col: usize| {
            CMatrix::from_fn(2, 2, move |i, j| {
                if i == r && j == col {
                    c(s, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            })
        };
        // Order E11, E12, E21, E22 throughout.
        let units = [unit(0, 0), unit(0, 1), unit(1, 0), unit(1, 1)];
        let row = CMatrix::from_fn(2, 8, |i, j| units[j / 2][(i, j % 2)]);
        let column = CMatrix::from_fn(8, 2, |i, j| units[i / 2][(i % 2, j)]);
        let blocks = CMatrix::from_fn(4, 4, |i, j| units[2 * (i / 2) + j / 2][(i % 2, j % 2)]);
        let row_norm = operator_norm(&row)?;
        let column_norm = operator_norm(&column)?;
        let block_norm = operator_norm(&blocks)?;
        let sqrt2 = 2.0f64.sqrt();
        Ok(vec![
            TrialRecord::measured(
                0,
                "row-of-units",
                "E11 E12 E21 E22 in a row".into(),
                metrics(&[("norm", row_norm), ("expected", 1.0)]),
                (row_norm - 1.0).abs(),
                CLOSED_FORM_TOL,
            ),
            TrialRecord::measured(
                0,
                "column-of-units",
                "E11 E12 E21 E22 stacked".into(),
                metrics(&[("norm", column_norm), ("expected", 1.0)]),
                (column_norm - 1.0).abs(),
                CLOSED_FORM_TOL,
            ),
            TrialRecord::measured(
                0,
                "two-by-two-blocks",
                "[[E11 E12][E21 E22]]".into(),
                metrics(&[("norm", block_norm), ("expected", sqrt2)]),
                (block_norm - sqrt2).abs(),
                CLOSED_FORM_TOL,
            ),
        ])
    });
    records
}

fn reproduce_alpha(cfg: &ExperimentConfig) -> Vec<TrialRecord> {
    let mut records = Vec::new();
    catch_trial(&mut records, 0, "column-sq", CLOSED_FORM_TOL, || {
        let alpha = cfg.alpha;
        let space = WeightedHardySpace::alpha_family(alpha, 50)?;
        let column_sq = space.column_norm_sq(&[1, 2])?;
        let row_sq = space.row_norm_sq(&[1, 2])?;
        let ratio = row_sq / column_sq;
        let b2 = space.pick_coefficients()[1];
        let pick = space.complete_pick_test(PICK_COEFF_TOL)?;
        let detail = format!("alpha={alpha} tuple=(z, z^2)");
        let expected_col = 1.0 + alpha;
        let expected_row = 2.0 * alpha;
        let expected_ratio = 2.0 * alpha / (1.0 + alpha);
        let expected_b2 = 1.0 / alpha - 1.0;
        let (violation_index, violation_value) = pick
            .first_violation
            .map_or((f64::NAN, f64::NAN), |(i, v)| (i as f64, v));
        Ok(vec![
            TrialRecord::measured(
                0,
                "column-sq",
                detail.clone(),
                metrics(&[("column_sq", column_sq), ("expected", expected_col)]),
                (column_sq - expected_col).abs(),
                CLOSED_FORM_TOL,
            ),
            TrialRecord::measured(
                0,
                "row-sq",
                detail.clone(),
                metrics(&[("row_sq", row_sq), ("expected", expected_row)]),
                (row_sq - expected_row).abs(),
                CLOSED_FORM_TOL,
            ),
            TrialRecord::measured(
                0,
                "row-column-ratio",
                detail.clone(),
                metrics(&[("ratio", ratio), ("expected", expected_ratio)]),
                (ratio - expected_ratio).abs(),
                CLOSED_FORM_TOL,
            ),
            TrialRecord::measured(
                0,
                "pick-b2",
                detail.clone(),
                metrics(&[("b2", b2), ("expected", expected_b2)]),
                (b2 - expected_b2).abs(),
                CLOSED_FORM_TOL,
            ),
            // A weighted Hardy space with alpha > 1 must fail the
            // truncated complete Pick test, first at n = 2.
            TrialRecord::measured(
                0,
                "not-complete-pick",
                format!("{detail} first violation b_{violation_index} = {violation_value}"),
                metrics(&[
                    ("verdict", f64::from(u8::from(pick.verdict))),
                    ("first_violation_index", violation_index),
                    ("first_violation_value", violation_value),
                ]),
                if pick.verdict || violation_index != 2.0 {
                    1.0
                } else {
                    0.0
                },
                0.0,
            ),
        ])
    });
    records
}

/// Documented disc configuration for the extreme-point search: the origin,
/// a real point, and two generic complex points.
pub fn extreme_example_points() -> Vec<BallPoint> {
    vec![
        BallPoint::origin(1),
        BallPoint::new(vec![c(0.5, 0.0)]).expect("in the disc"),
        BallPoint::new(vec![c(-0.3, 0.2)]).expect("in the disc"),
        BallPoint::new(vec![c(0.1, -0.55)]).expect("in the disc"),
    ]
}

fn reproduce_extreme(_cfg: &ExperimentConfig) -> Vec<TrialRecord> {
    let mut records = Vec::new();
    catch_trial(&mut records, 0, "singular-pick-witness", WITNESS_THRESHOLD, || {
        let pts = extreme_example_points();
        let space = FiniteKernelSpace::new(KernelModel::DruryArveson { dim: 1 }, pts.clone())?;
        let z_values: Vec<Complex64> = pts.iter().map(|p| p.coords()[0]).collect();
        let b_full = MultiplierTable::scalar(&z_values)?;
        // b = z has an exactly singular Pick matrix (the all-ones
        // matrix), so feasible amplitudes are pure tolerance noise; any
        // claimed witness must still verify.
        let w_full = extreme_witness(&space, &b_full)?;
        let max_amplitude = w_full.amplitudes.iter().copied().fold(0.0, f64::max);
        let mut out = Vec::new();
        if w_full.numerically_extreme {
            out.push(TrialRecord::measured(
                0,
                "singular-pick-witness",
                "b=z reported extreme".into(),
                metrics(&[("max_amplitude", max_amplitude)]),
                max_amplitude,
                WITNESS_THRESHOLD,
            ));
        } else {
            let (plus, minus) = quadratic_perturbation_norms(&space, &b_full, &w_full.witness)?;
            out.push(TrialRecord::measured(
                0,
                "singular-pick-witness",
                format!(
                    "b=z witness amplitude {max_amplitude:.3e} verifies: perturbation norms within slack"
                ),
                metrics(&[
                    ("max_amplitude", max_amplitude),
                    ("plus_norm", plus),
                    ("minus_norm", minus),
                ]),
                (plus - 1.0).max(minus - 1.0),
                CONTRACTIVITY_SLACK,
            ));
        }
        // b = z/2 is not extreme; the witness must be significant and both
        // quadratic perturbations must stay in the unit ball.
        let b_half = b_full.scale(c(0.5, 0.0));
        let w_half = extreme_witness(&space, &b_half)?;
        let amp = w_half.amplitudes[w_half.best_index];
        out.push(TrialRecord::measured(
            1,
            "witness-amplitude",
            format!("b=z/2 witness at point {}", w_half.best_index),
            metrics(&[("amplitude", amp)]),
            WITNESS_THRESHOLD - amp,
            0.0,
        ));
        let (plus, minus) = quadratic_perturbation_norms(&space, &b_half, &w_half.witness)?;
        out.push(TrialRecord::measured(
            1,
            "perturbation-plus",
            "norm of b + a^2/2".into(),
            metrics(&[("norm", plus)]),
            plus - 1.0,
            CONTRACTIVITY_SLACK,
        ));
        out.push(TrialRecord::measured(
            1,
            "perturbation-minus",
            "norm of b - a^2/2".into(),
            metrics(&[("norm", minus)]),
            minus - 1.0,
            CONTRACTIVITY_SLACK,
        ));
        // b = 0: every direction admits a sizable witness.
        let b_zero = MultiplierTable::zeros(pts.len(), 1, 1)?;
        let w_zero = extreme_witness(&space, &b_zero)?;
        let amp0 = w_zero.amplitudes[w_zero.best_index];
        out.push(TrialRecord::measured(
            2,
            "witness-amplitude",
            format!("b=0 witness at point {}", w_zero.best_index),
            metrics(&[("amplitude", amp0)]),
            WITNESS_THRESHOLD - amp0,
            0.0,
        ));
        let (plus0, minus0) = quadratic_perturbation_norms(&space, &b_zero, &w_zero.witness)?;
        out.push(TrialRecord::measured(
            2,
            "perturbation-plus",
            "norm of a^2/2".into(),
            metrics(&[("norm", plus0)]),
            plus0 - 1.0,
            CONTRACTIVITY_SLACK,
        ));
        out.push(TrialRecord::measured(
            2,
            "perturbation-minus",
            "norm of -a^2/2".into(),
            metrics(&[("norm", minus0)]),
            minus0 - 1.0,
            CONTRACTIVITY_SLACK,
        ));
        Ok(out)
    });
    records
}

/// Documented five-point configuration in the complex 2-ball (origin
/// included) for the interpolation demonstration.
pub fn interpolation_example_points() -> Vec<BallPoint> {
    vec![
        BallPoint::origin(2),
        BallPoint::new(vec![c(0.5, 0.0), c(0.0, 0.0)]).expect("in the ball"),
        BallPoint::new(vec![c(0.0, 0.1), c(0.5, -0.1)]).expect("in the ball"),
        BallPoint::new(vec![c(-0.3, 0.25), c(0.2, 0.3)]).expect("in the ball"),
        BallPoint::new(vec![c(0.2, -0.15), c(-0.4, 0.1)]).expect("in the ball"),
    ]
}

/// Exactness of `T(w)` as a table product: computes
/// `Phi^T diag(w) Phi` pointwise and compares with the weights.
fn interpolation_exactness(
    space_len: usize,
    basis: &MultiplierTable,
    weights: &[Complex64],
) -> Result<f64> {
    let diag = MultiplierTable::constant(
        space_len,
        CMatrix::from_fn(space_len, space_len, |i, j| {
            if i == j {
                weights[i]
            } else {
                c(0.0, 0.0)
            }
        }),
    )?;
    let product = multiply(&multiply(&basis.transpose(), &diag)?, basis)?;
    let mut worst = 0.0f64;
    for (m, w) in weights.iter().enumerate() {
        worst = worst.max((product.value(m)[(0, 0)] - w).norm());
    }
    Ok(worst)
}

fn reproduce_interpolation(cfg: &ExperimentConfig) -> Vec<TrialRecord> {
    let mut records = Vec::new();
    catch_trial(&mut records, 0, "interpolation-exactness", CLOSED_FORM_TOL, || {
        let pts = interpolation_example_points();
        let n = pts.len();
        let space = FiniteKernelSpace::new(KernelModel::DruryArveson { dim: 2 }, pts)?;
        let mut rng = trial_rng(cfg.seed, 0);
        let ones = vec![c(1.0, 0.0); n];
        let mut basis_vector = vec![c(0.0, 0.0); n];
        basis_vector[1] = c(1.0, 0.0);
        let random: Vec<Complex64> = (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c(re, im) * c(0.5, 0.0)
            })
            .collect();
        let mut out = Vec::new();
        for (label, weights) in [
            ("w=ones", ones),
            ("w=e_2", basis_vector),
            ("w=random", random),
        ] {
            let data = interpolation_operator(&space, &weights)?;
            let exactness = interpolation_exactness(n, &data.basis_column, &weights)?;
            let trial = out.len() / 2;
            out.push(TrialRecord::measured(
                trial,
                "interpolation-exactness",
                label.to_string(),
                metrics(&[("residual", exactness)]),
                exactness,
                CLOSED_FORM_TOL,
            ));
            out.push(TrialRecord::measured(
                trial,
                "interpolation-norm-bound",
                label.to_string(),
                metrics(&[
                    ("interpolant_norm", data.interpolant_norm),
                    ("column_norm", data.column_norm),
                    ("row_norm", data.row_norm),
                    ("bound", data.bound),
                ]),
                data.interpolant_norm - data.bound,
                cfg.tol,
            ));
        }
        // Carleson constant against an independent operator-norm route.
        let carleson = carleson_constant(&space)?;
        let g = CMatrix::from_fn(n, n, |i, j| {
            space.k(i, j) / (space.k(i, i).re * space.k(j, j).re).sqrt()
        });
        let cross = operator_norm(&g)?;
        out.push(TrialRecord::measured(
            3,
            "carleson-cross-check",
            "normalized Gram".into(),
            metrics(&[("carleson", carleson), ("operator_norm", cross)]),
            (carleson - cross).abs(),
            CARLESON_CROSS_TOL,
        ));
        // Weak separation: the closed form against a two-point Pick
        // bisection oracle, for every pair.
        let mut worst_pair = 0.0f64;
        let mut ws_min = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                let sub = space.restrict(&[i, j])?;
                let closed = weak_separation_constant(&sub)?;
                let oracle = separation_oracle(&sub)?;
                worst_pair = worst_pair.max((closed - oracle).abs());
                ws_min = ws_min.min(closed);
            }
        }
        out.push(TrialRecord::measured(
            4,
            "weak-separation-oracle",
            format!("all {} pairs", n * (n - 1) / 2),
            metrics(&[("worst_deviation", worst_pair), ("constant", ws_min)]),
            worst_pair,
            WEAK_SEPARATION_ORACLE_TOL,
        ));
        Ok(out)
    });
    records
}

/// Largest feasible value at the first point of a contractive multiplier
/// vanishing at the second, by bisection on the two-point Pick condition.
pub fn separation_oracle(two_points: &FiniteKernelSpace) -> Result<f64> {
    if two_points.n_points() != 2 {
        return Err(crlab_core::Error::InvalidInput(
            "the separation oracle works on two-point spaces".into(),
        ));
    }
    let feasible = |eps: f64| -> Result<bool> {
        let table = MultiplierTable::scalar(&[c(eps, 0.0), c(0.0, 0.0)])?;
        pick_feasible(two_points, two_points, &table, 1.0)
    };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    if feasible(hi)? {
        return Ok(hi);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn sweep_power_kernel(cfg: &ExperimentConfig) -> Vec<TrialRecord> {
    let mut records = Vec::with_capacity(cfg.steps * cfg.trials);
    for step in 0..cfg.steps {
        let a = if cfg.steps == 1 {
            cfg.a_min
        } else {
            cfg.a_min + (cfg.a_max - cfg.a_min) * step as f64 / (cfg.steps - 1) as f64
        };
        // The column-row inequality is a theorem only on the complete Pick
        // range a <= 1; beyond it the sweep records ratios without judging
        // them.
        let budget = if a <= 1.0 { cfg.tol } else { f64::INFINITY };
        for t in 0..cfg.trials {
            let trial = step * cfg.trials + t;
            let mut rng = trial_rng(cfg.seed, ((step as u64) << 32) | t as u64);
            catch_trial(&mut records, trial, "row-minus-column", budget, || {
                let n = rng.gen_range(2..=cfg.n.max(2));
                let big_n = rng.gen_range(1..=cfg.big_n);
                let pts = sample_ball_points(cfg.d, n, 0.8, 0.05, &mut rng)?;
                let space = FiniteKernelSpace::new(
                    KernelModel::PowerKernel {
                        dim: cfg.d,
                        exponent: a,
                    },
                    pts,
                )?;
                let margin = rng.gen_range(0.2..=1.0);
                let column = random_contractive_column(&space, big_n, margin, &mut rng)?;
                let column_norm =
                    multiplier_norm(&space, &space, &column, DEFAULT_BISECTION_TOL)?;
                let row_norm = multiplier_norm(
                    &space,
                    &space,
                    &column.transpose(),
                    DEFAULT_BISECTION_TOL,
                )?;
                Ok(vec![TrialRecord::measured(
                    trial,
                    "row-minus-column",
                    format!("a={a:.6} d={} n={n} N={big_n}", cfg.d),
                    metrics(&[
                        ("a", a),
                        ("column_norm", column_norm),
                        ("row_norm", row_norm),
                        ("ratio", row_norm / column_norm),
                    ]),
                    row_norm - column_norm,
                    budget,
                )])
            });
        }
    }
    records
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{load_config, Overrides};

    fn config_for(command: Command, trials: usize) -> ExperimentConfig {
        let over = Overrides {
            trials: Some(trials),
            ..Overrides::default()
        };
        load_config(command, None, &over).unwrap()
    }

    #[test]
    fn trial_rng_streams_are_stable_and_distinct() {
        let mut a = trial_rng(42, 0);
        let mut b = trial_rng(42, 0);
        let mut c = trial_rng(42, 1);
        let xs: Vec<u64> = (0..4).map(|_| a.gen()).collect();
        let ys: Vec<u64> = (0..4).map(|_| b.gen()).collect();
        let zs: Vec<u64> = (0..4).map(|_| c.gen()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn column_row_suite_passes_on_a_small_batch() {
        let report = run_command(&config_for(Command::VerifyColumnRow, 8));
        assert!(report.summary.pass, "{:#?}", report.summary);
        assert_eq!(report.summary.records, 8);
    }

    #[test]
    fn column_matrix_suite_passes_on_a_small_batch() {
        let report = run_command(&config_for(Command::VerifyColumnMatrix, 6));
        assert!(report.summary.pass, "{:#?}", report.summary);
    }

    #[test]
    fn pairs_suite_passes_on_a_small_batch() {
        let report = run_command(&config_for(Command::VerifyPairs, 6));
        assert!(report.summary.pass, "{:#?}", report.summary);
    }

    #[test]
    fn leech_suite_passes_on_a_small_batch() {
        let report = run_command(&config_for(Command::LeechCheck, 4));
        assert!(report.summary.pass, "{:#?}", report.summary);
        assert_eq!(report.summary.records, 16, "four records per trial");
    }

    #[test]
    fn moebius_suite_passes_on_a_small_batch() {
        let report = run_command(&config_for(Command::MoebiusIdentities, 5));
        assert!(report.summary.pass, "{:#?}", report.summary);
        assert_eq!(report.summary.records, 2 * 3 * 5);
    }

    #[test]
    fn matrix_units_are_exact() {
        let report = run_command(&config_for(Command::ReproduceMatrixUnits, 1));
        assert!(report.summary.pass, "{:#?}", report.records);
        let norms: Vec<f64> = report
            .records
            .iter()
            .map(|r| r.metrics["norm"])
            .collect();
        assert!((norms[0] - 1.0).abs() <= 1e-12);
        assert!((norms[1] - 1.0).abs() <= 1e-12);
        assert!((norms[2] - 2.0f64.sqrt()).abs() <= 1e-12);
    }

    #[test]
    fn alpha_reproduction_matches_closed_forms() {
        let report = run_command(&config_for(Command::ReproduceAlpha, 1));
        assert!(report.summary.pass, "{:#?}", report.records);
        let by_check = |name: &str| {
            report
                .records
                .iter()
                .find(|r| r.check == name)
                .unwrap_or_else(|| panic!("missing {name}"))
                .clone()
        };
        assert!((by_check("column-sq").metrics["column_sq"] - 5.0).abs() <= 1e-12);
        assert!((by_check("row-sq").metrics["row_sq"] - 8.0).abs() <= 1e-12);
        assert!((by_check("pick-b2").metrics["b2"] + 0.75).abs() <= 1e-12);
        assert_eq!(by_check("not-complete-pick").metrics["verdict"], 0.0);
    }

    #[test]
    fn extreme_reproduction_passes() {
        let report = run_command(&config_for(Command::ReproduceExtreme, 1));
        assert!(report.summary.pass, "{:#?}", report.records);
    }

    #[test]
    fn interpolation_reproduction_passes() {
        let report = run_command(&config_for(Command::ReproduceInterpolation, 1));
        assert!(report.summary.pass, "{:#?}", report.records);
    }

    #[test]
    fn sweep_records_ratios_and_respects_pick_range() {
        let over = Overrides {
            trials: Some(2),
            steps: Some(3),
            a_min: Some(0.5),
            a_max: Some(1.5),
            n: Some(4),
            ..Overrides::default()
        };
        let cfg = load_config(Command::SweepPowerKernel, None, &over).unwrap();
        let report = run_command(&cfg);
        assert_eq!(report.summary.records, 6);
        assert!(report.summary.pass, "{:#?}", report.summary);
        for r in &report.records {
            assert!(r.metrics.contains_key("ratio"));
        }
    }

    #[test]
    fn example_points_are_deterministic_and_inside_the_ball() {
        let pts = row_column_example_points(40);
        assert_eq!(pts.len(), 40);
        assert_eq!(pts[0].norm(), 0.0);
        for p in &pts {
            assert!(p.norm() < 0.98);
        }
        let again = row_column_example_points(40);
        assert_eq!(pts, again);
    }

    #[test]
    fn separation_oracle_matches_closed_form_on_szego_pairs() {
        let pts = vec![
            BallPoint::origin(1),
            BallPoint::new(vec![c(0.6, 0.1)]).unwrap(),
        ];
        let space =
            FiniteKernelSpace::new(KernelModel::DruryArveson { dim: 1 }, pts).unwrap();
        let closed = weak_separation_constant(&space).unwrap();
        let oracle = separation_oracle(&space).unwrap();
        assert!((closed - oracle).abs() <= 1e-8, "{closed} vs {oracle}");
    }
}
