//! Verification battery: every identity of the library checked numerically
//! at desk scale, with seeded random samples.
//!
//! Criteria `"1"` to `"11"` form the acceptance suite; the `"s-*"` groups
//! are supplementary cross-checks run by the CLI.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::composite::{check_composite_block, two_stage_cg};
use crate::coupling::{
    casimir_block, casimir_dense_block, cg_ratio_check, closed_form_block, decompose, decomposable, eigenpair_set,
    half_spin_coefficient, pair_for, sanity_j, unitary_outputs, CouplingProblem, DiagonalReading, EigenPair,
};
use crate::dense::multiset_distance;
use crate::error::{Error, Result};
use crate::half::{jset_upto, mrange, sigma_count, steps, vj_dimension, HalfInt};
use crate::repr::{casimir_eigenvalues, classify, finite_dim, ladder_commutator, Classification, FiniteLabel, Generator, IrrepLabel, TruncatedModule};
use crate::sparse::SparseOperator;
use crate::su2::su2_cg;
use crate::tensorop::{
    intertwiner_residual, js_ansatz_residuals, js_commutators, js_normalisation_product, js_reconstruct_residuals,
    js_reduced_elements, projection_from_table, reduced_matrix_element, wigner_eckart_projection, MARGIN,
};
use crate::tridiag::{cluster_size, dense_eig_oracle, eigvec_by_recurrence, geometric_multiplicity, Tridiagonal};

type C64 = Complex<f64>;
type Label = IrrepLabel<f64>;

pub const DEFAULT_SEED: u64 = 1;

/// Acceptance criterion identifiers, in order.
pub const ACCEPTANCE: [&str; 11] = ["1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11"];

/// Supplementary groups run by the CLI after the acceptance criteria.
pub const SUPPLEMENTARY: [&str; 4] = ["s-prop1", "s-distinct", "s-composite", "s-js-table"];

#[derive(Clone, Copy, Debug)]
pub struct Config {
    pub seed: u64,
    /// Replaces every default tolerance when set.
    pub tolerance: Option<f64>,
}

impl Default for Config {
    fn default() -> Self {
        Config { seed: DEFAULT_SEED, tolerance: None }
    }
}

impl Config {
    fn tol(&self, default: f64) -> f64 {
        self.tolerance.unwrap_or(default)
    }

    fn rng(&self, group: &str) -> ChaCha8Rng {
        // one stream per group, independent of execution order
        let salt = group.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
        ChaCha8Rng::seed_from_u64(self.seed ^ salt)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub anchor: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, anchor: &str, residual: f64, tolerance: f64) -> Self {
        Check { name: name.into(), anchor: anchor.into(), residual, tolerance, passed: residual <= tolerance }
    }

    fn failed(name: impl Into<String>, anchor: &str, err: &Error) -> Self {
        Check { name: format!("{}: {err}", name.into()), anchor: anchor.into(), residual: f64::INFINITY, tolerance: 0.0, passed: false }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Group {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// A measured quantity reported without a pass/fail verdict.
#[derive(Clone, Debug, Serialize)]
pub struct Note {
    pub name: String,
    pub value: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub seed: u64,
    pub passed: bool,
    pub groups: Vec<Group>,
    pub notes: Vec<Note>,
}

pub fn title(id: &str) -> &'static str {
    match id {
        "1" => "algebra closure of the ladder commutators",
        "2" => "Casimir scalars",
        "3" => "gamma = 1/2 closed-form table and A = B",
        "4" => "V_J spectra and dimensions",
        "5" => "defect detection for non-decomposable couplings",
        "6" => "J-independence of the coefficient ratio",
        "7" => "Wigner-Eckart round trip",
        "8" => "Jordan-Schwinger reconstruction and commutators",
        "9" => "random tridiagonal eigenspaces are one-dimensional",
        "10" => "su(2) Clebsch-Gordan layer",
        "11" => "classification and dimensions",
        "s-prop1" => "Casimir spectra agree on V^J_M for M = J, J-1, J-2",
        "s-distinct" => "eigenvalue pairs are pairwise distinct when decomposable",
        "s-composite" => "two-stage coupling against the triple product",
        "s-js-table" => "Jordan-Schwinger operators factor through the gamma = 1/2 table",
        _ => "unknown group",
    }
}

/// Runs one group; unknown ids are a domain error.
pub fn run_group(id: &str, config: &Config) -> Result<Group> {
    let checks = match id {
        "1" => algebra_closure(config),
        "2" => casimir_scalars(config),
        "3" => half_spin_table(config),
        "4" => spectra(config),
        "5" => defects(config),
        "6" => ratios(config),
        "7" => wigner_eckart(config),
        "8" => jordan_schwinger(config),
        "9" => random_tridiagonals(config),
        "10" => su2_layer(config),
        "11" => classification(config),
        "s-prop1" => m_independence(config),
        "s-distinct" => distinctness(config),
        "s-composite" => composite(config),
        "s-js-table" => js_table(config),
        other => return Err(Error::Domain(format!("unknown verification group {other:?}"))),
    };
    let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
    Ok(Group { id: id.into(), title: title(id).into(), passed, checks })
}

/// Runs the given groups in parallel; output order follows `ids`.
pub fn run(ids: &[&str], config: &Config) -> Result<Report> {
    let groups = ids.par_iter().map(|id| run_group(id, config)).collect::<Result<Vec<_>>>()?;
    let passed = groups.iter().all(|g| g.passed);
    Ok(Report { seed: config.seed, passed, groups, notes: notes() })
}

pub fn run_all(config: &Config) -> Result<Report> {
    let ids: Vec<&str> = ACCEPTANCE.iter().chain(SUPPLEMENTARY.iter()).copied().collect();
    run(&ids, config)
}

// ---------------------------------------------------------------------------
// Sampling

fn h(twice: i32) -> HalfInt {
    HalfInt::from_twice(twice)
}

/// Label with `|lambda| <= lambda_max_x2 / 2` and `|rho| <= rho_max`,
/// infinite-dimensional and accepted by `keep`.
fn random_label(rng: &mut ChaCha8Rng, lambda_max_x2: i32, rho_max: f64, keep: impl Fn(&Label) -> bool) -> Label {
    loop {
        let lx2 = rng.random_range(-lambda_max_x2..=lambda_max_x2);
        let (re, im) = (rng.random_range(-rho_max..rho_max), rng.random_range(-rho_max..rho_max));
        if re.hypot(im) > rho_max {
            continue;
        }
        let label = IrrepLabel { lambda: h(lx2), rho: C64::new(re, im) };
        if !label.is_finite_dimensional() && keep(&label) {
            return label;
        }
    }
}

fn describe(l: &Label) -> String {
    format!("(lambda={}, rho={:.4}{:+.4}i)", l.lambda, l.rho.re, l.rho.im)
}

fn finite(gamma: HalfInt, a: i8) -> FiniteLabel {
    FiniteLabel::new(gamma, a).expect("valid finite label")
}

fn top_admissible(lambda: HalfInt, gamma: HalfInt, upto: HalfInt) -> Result<HalfInt> {
    jset_upto(lambda, gamma, upto)?.last().copied().ok_or_else(|| Error::Domain(format!("no admissible J up to {upto}")))
}

fn collect(name: &str, anchor: &str, r: Result<Vec<Check>>) -> Vec<Check> {
    r.unwrap_or_else(|e| vec![Check::failed(name, anchor, &e)])
}

// ---------------------------------------------------------------------------
// 1, 2

fn closure_labels(config: &Config) -> Vec<Label> {
    let mut rng = config.rng("closure");
    (0..10).map(|_| random_label(&mut rng, 4, 3.0, |_| true)).collect()
}

fn closure_residual(module: &TruncatedModule<f64>) -> Result<f64> {
    let gens: Vec<SparseOperator<f64>> = Generator::ALL.iter().map(|&g| module.generator(g)).collect();
    let keep = module.interior(MARGIN);
    let mut worst = 0.0f64;
    for (i, &a) in Generator::ALL.iter().enumerate() {
        for (k, &b) in Generator::ALL.iter().enumerate().skip(i + 1) {
            let lhs = gens[i].commutator(&gens[k])?;
            let mut rhs = SparseOperator::zeros(module.basis().clone(), module.basis().clone());
            for (c, coeff) in ladder_commutator(a, b) {
                let idx = Generator::ALL.iter().position(|&g| g == c).expect("generator");
                rhs = rhs.axpy(coeff, &gens[idx])?;
            }
            let scale = 1f64.max(lhs.max_abs_on_columns(&keep));
            worst = worst.max(lhs.max_diff_on_columns(&rhs, &keep)? / scale);
        }
    }
    Ok(worst)
}

fn algebra_closure(config: &Config) -> Vec<Check> {
    let anchor = "[J_a, J_b] = i eps J_c, [J_a, K_b] = i eps K_c, [K_a, K_b] = -i eps J_c in the ladder basis";
    closure_labels(config)
        .iter()
        .map(|l| {
            let name = format!("closure {}", describe(l));
            TruncatedModule::new(*l, l.lambda.abs() + HalfInt::from_int(12))
                .and_then(|m| closure_residual(&m))
                .map(|r| Check::new(&name, anchor, r, config.tol(1e-10)))
                .unwrap_or_else(|e| Check::failed(&name, anchor, &e))
        })
        .collect()
}

fn casimir_scalars(config: &Config) -> Vec<Check> {
    let anchor = "C_1 = i lambda rho, C_2 = lambda^2 + rho^2 - 1";
    let mut out = Vec::new();
    for l in closure_labels(config) {
        let name = format!("Casimirs {}", describe(&l));
        let r = (|| -> Result<[f64; 2]> {
            let m = TruncatedModule::new(l, l.lambda.abs() + HalfInt::from_int(12))?;
            let (c1, c2) = m.casimirs()?;
            let (k1, k2) = casimir_eigenvalues(&l);
            let keep = m.interior(MARGIN);
            let id = SparseOperator::identity(m.basis().clone());
            let d1 = c1.max_diff_on_columns(&id.scale(k1), &keep)? / 1f64.max(k1.norm());
            let d2 = c2.max_diff_on_columns(&id.scale(k2), &keep)? / 1f64.max(k2.norm());
            Ok([d1, d2])
        })();
        match r {
            Ok([d1, d2]) => {
                out.push(Check::new(format!("C1 {name}"), anchor, d1, config.tol(1e-10)));
                out.push(Check::new(format!("C2 {name}"), anchor, d2, config.tol(1e-10)));
            }
            Err(e) => out.push(Check::failed(name, anchor, &e)),
        }
    }
    out
}

// ---------------------------------------------------------------------------
// 3

fn half_spin_table(config: &Config) -> Vec<Check> {
    let anchor = "gamma = 1/2 closed-form coefficients; A{j | (Lambda,P) J} = B{(Lambda,P) J | j}";
    let mut rng = config.rng("half-spin");
    let mut out = Vec::new();
    for _ in 0..5 {
        let l = random_label(&mut rng, 4, 3.0, |l| decomposable(finite(HalfInt::HALF, 1), l) && decomposable(finite(HalfInt::HALF, -1), l));
        for a in [1i8, -1] {
            let name = format!("{} A={a:+}", describe(&l));
            let r = (|| -> Result<(f64, f64)> {
                let p = CouplingProblem::new(finite(HalfInt::HALF, a), l)?;
                let table = decompose(&p, top_admissible(l.lambda, HalfInt::HALF, h(15))?)?;
                let (mut table_dev, mut ab_dev) = (0.0f64, 0.0f64);
                for block in &table.blocks {
                    for pair in &block.pairs {
                        for &j in &block.omega {
                            let expect = half_spin_coefficient(&l, a, !pair.nu.is_negative(), block.j_total, j)?;
                            table_dev = table_dev.max((block.b_coeff(pair.nu, j) - expect).norm());
                            ab_dev = ab_dev.max((block.a_coeff(j, pair.nu) - block.b_coeff(pair.nu, j)).norm());
                        }
                    }
                }
                Ok((table_dev, ab_dev))
            })();
            match r {
                Ok((t, ab)) => {
                    out.push(Check::new(format!("closed form {name}"), anchor, t, config.tol(1e-10)));
                    out.push(Check::new(format!("A = B {name}"), anchor, ab, config.tol(1e-10)));
                }
                Err(e) => out.push(Check::failed(name, anchor, &e)),
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// 4, 5

fn spectra(config: &Config) -> Vec<Check> {
    let anchor = "spectrum of C_1 on V_J is {i (lambda+nu)(rho+A nu)}; dim V_J = sum_nu [J >= |lambda+nu|]";
    let mut rng = config.rng("spectra");
    let mut out = Vec::new();
    for gx2 in [2, 3, 4] {
        let g = h(gx2);
        for a in [1i8, -1] {
            let name = format!("gamma={g} A={a:+}");
            let r = (|| -> Result<(f64, f64)> {
                let (mut dist, mut dim_errors) = (0.0f64, 0usize);
                for _ in 0..5 {
                    let l = random_label(&mut rng, 4, 3.0, |l| decomposable(finite(g, a), l));
                    let p = CouplingProblem::new(finite(g, a), l)?;
                    for big_j in jset_upto(l.lambda, g, l.lambda.abs() + g + HalfInt::from_int(4))? {
                        let block = casimir_block(&p, big_j)?;
                        let pairs = eigenpair_set(&p, big_j)?;
                        let expected: Vec<C64> = pairs.iter().map(|q| q.casimirs().0).collect();
                        let found = dense_eig_oracle(&block.c1)?;
                        let scale = 1f64.max(block.c1.max_abs());
                        dist = dist.max(multiset_distance(&expected, &found).unwrap_or(f64::INFINITY) / scale);
                        let n = block.omega.len();
                        if n != pairs.len() || n != sigma_count(l.lambda, g, big_j)? || n != vj_dimension(l.lambda, g, big_j)? {
                            dim_errors += 1;
                        }
                    }
                }
                Ok((dist, dim_errors as f64))
            })();
            match r {
                Ok((d, e)) => {
                    out.push(Check::new(format!("oracle spectrum {name}"), anchor, d, config.tol(1e-8)));
                    out.push(Check::new(format!("dimension count {name}"), anchor, e, 0.0));
                }
                Err(e) => out.push(Check::failed(name, anchor, &e)),
            }
        }
    }
    out
}

/// Detects a repeated eigenvalue with a one-dimensional eigenspace on some
/// `V_J`; returns `(algebraic, geometric)` at the first detection.
fn defect(p: &CouplingProblem<f64>, n: i32) -> Result<Option<(HalfInt, usize, usize)>> {
    let g = p.gamma();
    // nu + nu' = -A n
    let target = -(n * p.finite.a as i32);
    let nus = mrange(g)?;
    let Some((nu, _)) = nus
        .iter()
        .flat_map(|&x| nus.iter().map(move |&y| (x, y)))
        .find(|&(x, y)| x < y && (x + y).as_int() == Some(target))
    else {
        return Ok(None);
    };
    let k = pair_for(p, nu).casimirs().0;
    let lo = p.lambda().abs() + g;
    for big_j in jset_upto(p.lambda(), g, lo + HalfInt::from_int(4))?.into_iter().filter(|&j| j >= lo) {
        let block = casimir_block(p, big_j)?;
        let eigs = dense_eig_oracle(&block.c1)?;
        let radius = 1e-4 * 1f64.max(block.c1.max_abs());
        let alg = cluster_size(&eigs, k, radius);
        let geo = geometric_multiplicity(&block.c1, k);
        if alg >= 2 && geo == 1 {
            return Ok(Some((big_j, alg, geo)));
        }
    }
    Ok(None)
}

fn defects(_config: &Config) -> Vec<Check> {
    let anchor = "rho + A lambda integer in (-2 gamma, 2 gamma): a V_J block is not diagonalisable";
    let mut out = Vec::new();
    for gx2 in [1, 2, 3] {
        let g = h(gx2);
        for n in (1 - gx2)..gx2 {
            for a in [1i8, -1] {
                // lambda = +-L keeps |rho| <= |lambda| so the module stays infinite-dimensional
                let big_l = h(2 * gx2 + 3);
                let lambda = if n >= 0 { big_l } else { -big_l };
                let lambda = if a > 0 { lambda } else { -lambda };
                let rho = C64::new(-(a as f64) * lambda.to_f64() + n as f64, 0.0);
                let name = format!("gamma={g} n={n} A={a:+} lambda={lambda}");
                let r = IrrepLabel::new(lambda, rho).and_then(|l| CouplingProblem::new(finite(g, a), l)).and_then(|p| defect(&p, n));
                out.push(match r {
                    Ok(Some((big_j, alg, geo))) => Check::new(format!("{name}: J={big_j} algebraic {alg} geometric {geo}"), anchor, 0.0, 0.0),
                    Ok(None) => Check::new(format!("{name}: no defective block"), anchor, 1.0, 0.0),
                    Err(e) => Check::failed(name, anchor, &e),
                });
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// 6

fn ratios(config: &Config) -> Vec<Check> {
    let anchor = "B{(Lambda+1,P+A) J | J-gamma} / B{(Lambda,P) J | J-gamma} is a fixed multiple of the closed root ratio";
    let mut rng = config.rng("ratios");
    let mut out = Vec::new();
    for gx2 in [1, 2] {
        let g = h(gx2);
        for a in [1i8, -1] {
            let l = random_label(&mut rng, 4, 3.0, |l| decomposable(finite(g, a), l));
            let name = format!("gamma={g} A={a:+} {}", describe(&l));
            let r = (|| -> Result<f64> {
                let p = CouplingProblem::new(finite(g, a), l)?;
                let start = sanity_j(&p);
                let table = decompose(&p, start + HalfInt::from_int(4))?;
                let mut worst = 0.0f64;
                for nu in mrange(g)?.into_iter().filter(|&nu| nu < g) {
                    let qs = (0..5)
                        .map(|k| cg_ratio_check(&table, nu, start + HalfInt::from_int(k)).map(|(lhs, rhs)| lhs / rhs))
                        .collect::<Result<Vec<_>>>()?;
                    for q in &qs[1..] {
                        worst = worst.max((q / qs[0] - 1.0).norm());
                    }
                }
                Ok(worst)
            })();
            out.push(r.map(|x| Check::new(&name, anchor, x, config.tol(1e-9))).unwrap_or_else(|e| Check::failed(&name, anchor, &e)));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// 7

fn wigner_eckart(config: &Config) -> Vec<Check> {
    let anchor = "tensor operators factor as reduced element x B x su(2) CG; absent targets vanish";
    let mut rng = config.rng("wigner-eckart");
    let mut out = Vec::new();
    for gx2 in [1, 2] {
        let g = h(gx2);
        for a in [1i8, -1] {
            let l = random_label(&mut rng, 4, 3.0, |l| {
                decomposable(finite(g, a), l)
                    && mrange(g).unwrap().iter().all(|&nu| {
                        let lab = IrrepLabel { lambda: l.lambda + nu, rho: l.rho + nu.to_f64() * a as f64 };
                        !lab.is_finite_dimensional()
                    })
            });
            let base = format!("gamma={g} A={a:+} {}", describe(&l));
            let r = (|| -> Result<Vec<Check>> {
                let p = CouplingProblem::new(finite(g, a), l)?;
                let cut = l.lambda.abs() + HalfInt::from_int(6);
                let table = decompose(&p, top_admissible(l.lambda, g, cut + g)?)?;
                let mut checks = Vec::new();
                for nu in mrange(g)? {
                    let t = projection_from_table(&table, nu, cut)?;
                    let worst = Generator::ALL.iter().map(|&x| intertwiner_residual(&t, x)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
                    checks.push(Check::new(format!("intertwiner nu={nu} {base}"), anchor, worst, config.tol(1e-9)));
                    let red = reduced_matrix_element(&t, &table)?;
                    checks.push(Check::new(format!("reduced element - 1, nu={nu} {base}"), anchor, (red.value - 1.0).norm(), config.tol(1e-9)));
                    checks.push(Check::new(format!("scatter nu={nu} {base} ({} samples)", red.samples), anchor, red.scatter, config.tol(1e-9)));
                }
                let wrong = EigenPair { nu: HalfInt::ZERO, lambda: l.lambda, p: l.rho + 0.37 };
                let absent = matches!(wigner_eckart_projection(&p, &wrong, cut), Err(Error::AbsentTarget { .. }));
                checks.push(Check::new(format!("absent target rejected {base}"), anchor, if absent { 0.0 } else { 1.0 }, 0.0));
                Ok(checks)
            })();
            out.extend(collect(&base, anchor, r));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// 8

fn js_labels(config: &Config) -> Vec<Label> {
    let mut rng = config.rng("jordan-schwinger");
    (0..5)
        .map(|_| random_label(&mut rng, 4, 3.0, |l| (l.rho - l.lambda_t()).norm() > 1e-6 && (l.rho + l.lambda_t()).norm() > 1e-6))
        .collect()
}

fn jordan_schwinger(config: &Config) -> Vec<Check> {
    let anchor = "M = (J - i A K)/2 from T, T~; [T^A_+, T~^B_-] = [T~^A_+, T^B_-] = delta^AB, [T, T] = [T~, T~] = 0";
    let mut out = Vec::new();
    for l in js_labels(config) {
        let cut = l.lambda.abs() + HalfInt::from_int(8);
        for a in [1i8, -1] {
            let base = format!("{} A={a:+}", describe(&l));
            let r = (|| -> Result<Vec<Check>> {
                let mut checks = Vec::new();
                let rec = js_reconstruct_residuals(&l, a, cut)?;
                checks.push(Check::new(format!("reconstruct {base}"), anchor, rec.iter().map(|c| c.residual).fold(0.0, f64::max), config.tol(1e-10)));
                let ans = js_ansatz_residuals(&l, a, cut)?;
                checks.push(Check::new(format!("V_mu contraction {base}"), anchor, ans.iter().map(|c| c.residual).fold(0.0, f64::max), config.tol(1e-10)));
                for b in [1i8, -1] {
                    let com = js_commutators(&l, a, b, cut)?;
                    checks.push(Check::new(format!("commutators {base} B={b:+}"), anchor, com.iter().map(|c| c.residual).fold(0.0, f64::max), config.tol(1e-10)));
                }
                Ok(checks)
            })();
            out.extend(collect(&base, anchor, r));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// 9

fn random_tridiagonals(config: &Config) -> Vec<Check> {
    let anchor = "tridiagonal matrices with nonzero superdiagonal have one-dimensional eigenspaces";
    let mut rng = config.rng("tridiagonal");
    let unit = |rng: &mut ChaCha8Rng| C64::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
    let (mut bad_geo, mut worst_vec, mut failures) = (0usize, 0.0f64, 0usize);
    for _ in 0..200 {
        let n = rng.random_range(2..=8usize);
        let sub = (0..n - 1).map(|_| unit(&mut rng)).collect();
        let diag = (0..n).map(|_| unit(&mut rng)).collect();
        let sup = (0..n - 1)
            .map(|_| loop {
                let z = unit(&mut rng);
                if z.norm() > 0.1 {
                    break z;
                }
            })
            .collect();
        let t = Tridiagonal::new(sub, diag, sup).expect("consistent lengths");
        match dense_eig_oracle(&t) {
            Ok(eigs) => {
                for k in eigs {
                    if geometric_multiplicity(&t, k) != 1 {
                        bad_geo += 1;
                    }
                    match eigvec_by_recurrence(&t, k, 1e-9) {
                        Ok(x) => worst_vec = worst_vec.max(t.residual(&x, k) / 1f64.max(t.max_abs())),
                        Err(_) => failures += 1,
                    }
                }
            }
            Err(_) => failures += 1,
        }
    }
    vec![
        Check::new("eigenvalues with geometric multiplicity != 1 (200 matrices)", anchor, bad_geo as f64, 0.0),
        Check::new("recurrence eigenvector residual", anchor, worst_vec, config.tol(1e-9)),
        Check::new("oracle or recurrence failures", anchor, failures as f64, 0.0),
    ]
}

// ---------------------------------------------------------------------------
// 10

pub mod oracle {
    //! Clebsch-Gordan coefficients by lowering the stretched state and
    //! Gram-Schmidt against the states already built.

    use std::collections::BTreeMap;

    use crate::half::{mrange, HalfInt};

    fn lower_coeff(j: HalfInt, m: HalfInt) -> f64 {
        let (j, m) = (j.to_f64(), m.to_f64());
        ((j + m) * (j - m + 1.0)).sqrt()
    }

    /// `<j1 m1; j2 m2 | J M>` keyed by `(m1, m2, J, M)`; absent keys are zero.
    pub fn table(j1: HalfInt, j2: HalfInt) -> BTreeMap<(HalfInt, HalfInt, HalfInt, HalfInt), f64> {
        let m1s = mrange(j1).expect("spin");
        let m2s = mrange(j2).expect("spin");
        let idx = |m1: HalfInt, m2: HalfInt| {
            let a = m1s.iter().position(|&x| x == m1)?;
            let b = m2s.iter().position(|&x| x == m2)?;
            Some(a * m2s.len() + b)
        };
        let dim = m1s.len() * m2s.len();
        let lower = |v: &[f64]| {
            let mut w = vec![0.0; dim];
            for &m1 in &m1s {
                for &m2 in &m2s {
                    let x = v[idx(m1, m2).unwrap()];
                    if x == 0.0 {
                        continue;
                    }
                    if let Some(i) = idx(m1 - HalfInt::ONE, m2) {
                        w[i] += lower_coeff(j1, m1) * x;
                    }
                    if let Some(i) = idx(m1, m2 - HalfInt::ONE) {
                        w[i] += lower_coeff(j2, m2) * x;
                    }
                }
            }
            w
        };
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

        // states[(J, M)]
        let mut states: BTreeMap<(HalfInt, HalfInt), Vec<f64>> = BTreeMap::new();
        let top = j1 + j2;
        let bottom = (j1 - j2).abs();
        let mut big_j = top;
        while big_j >= bottom {
            // seed: the basis vector with m1 = j1, then remove higher J at M = J
            let mut v = vec![0.0; dim];
            v[idx(j1, big_j - j1).expect("in range")] = 1.0;
            for (&(_, m), u) in states.iter() {
                if m == big_j {
                    let c = dot(u, &v);
                    v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
                }
            }
            let n = dot(&v, &v).sqrt();
            v.iter_mut().for_each(|x| *x /= n);
            let mut m = big_j;
            loop {
                let next = lower(&v);
                states.insert((big_j, m), v);
                if m == -big_j {
                    break;
                }
                let c = lower_coeff(big_j, m);
                v = next.into_iter().map(|x| x / c).collect();
                m -= HalfInt::ONE;
            }
            big_j -= HalfInt::ONE;
        }
        let mut out = BTreeMap::new();
        for ((big_j, big_m), v) in states {
            for &m1 in &m1s {
                for &m2 in &m2s {
                    let x = v[idx(m1, m2).unwrap()];
                    if x != 0.0 {
                        out.insert((m1, m2, big_j, big_m), x);
                    }
                }
            }
        }
        out
    }
}

fn su2_layer(config: &Config) -> Vec<Check> {
    let anchor = "su(2) Clebsch-Gordan coefficients, Condon-Shortley phases";
    let r = (|| -> Result<(f64, f64, f64)> {
        let (mut orth, mut comp, mut diff) = (0.0f64, 0.0f64, 0.0f64);
        for t1 in 0..=6 {
            for t2 in 0..=6 {
                let (j1, j2) = (h(t1), h(t2));
                let js: Vec<HalfInt> = steps((j1 - j2).abs(), j1 + j2).collect();
                let m1s = mrange(j1)?;
                let m2s = mrange(j2)?;
                let cg = |m1, m2, big_j, big_m| su2_cg::<f64>(j1, m1, j2, m2, big_j, big_m);
                // orthogonality over (J, J', M)
                for &a in &js {
                    for &b in &js {
                        for big_m in mrange(a.min(b))? {
                            let mut s = 0.0;
                            for &m1 in &m1s {
                                let m2 = big_m - m1;
                                if m2.abs() <= j2 {
                                    s += cg(m1, m2, a, big_m)? * cg(m1, m2, b, big_m)?;
                                }
                            }
                            orth = orth.max((s - if a == b { 1.0 } else { 0.0 }).abs());
                        }
                    }
                }
                // completeness over (m1, m2), (m1', m2') with m1 + m2 = m1' + m2'
                for &m1 in &m1s {
                    for &m2 in &m2s {
                        for &n1 in &m1s {
                            let n2 = m1 + m2 - n1;
                            if n2.abs() > j2 || !(j2 - n2).is_integer() {
                                continue;
                            }
                            let mut s = 0.0;
                            for &big_j in &js {
                                if (m1 + m2).abs() <= big_j {
                                    s += cg(m1, m2, big_j, m1 + m2)? * cg(n1, n2, big_j, m1 + m2)?;
                                }
                            }
                            comp = comp.max((s - if m1 == n1 { 1.0 } else { 0.0 }).abs());
                        }
                    }
                }
                let table = oracle::table(j1, j2);
                for &big_j in &js {
                    for big_m in mrange(big_j)? {
                        for &m1 in &m1s {
                            let m2 = big_m - m1;
                            if m2.abs() > j2 {
                                continue;
                            }
                            let o = table.get(&(m1, m2, big_j, big_m)).copied().unwrap_or(0.0);
                            diff = diff.max((cg(m1, m2, big_j, big_m)? - o).abs());
                        }
                    }
                }
            }
        }
        Ok((orth, comp, diff))
    })();
    match r {
        Ok((o, c, d)) => vec![
            Check::new("orthogonality j1, j2 <= 3", anchor, o, config.tol(1e-12)),
            Check::new("completeness j1, j2 <= 3", anchor, c, config.tol(1e-12)),
            Check::new("closed form vs Gram-Schmidt oracle", anchor, d, config.tol(1e-12)),
        ],
        Err(e) => vec![Check::failed("su2", anchor, &e)],
    }
}

// ---------------------------------------------------------------------------
// 11

fn class_grid(rng: &mut ChaCha8Rng) -> Vec<(Label, Classification)> {
    let mut out = Vec::new();
    let l = |lx2: i32, re: f64, im: f64| IrrepLabel { lambda: h(lx2), rho: C64::new(re, im) };
    for _ in 0..10 {
        out.push((l(rng.random_range(-4..=4), 0.0, rng.random_range(-3.0..3.0)), Classification::Principal));
    }
    for _ in 0..10 {
        let s: f64 = rng.random_range(0.05..0.95);
        let s = if rng.random_bool(0.5) { s } else { -s };
        out.push((l(0, s, 0.0), Classification::Complementary));
    }
    for s in [1.0, -1.0, 1.0, -1.0] {
        out.push((l(0, s, 0.0), Classification::Trivial));
    }
    for k in 0..13 {
        let lx2 = k % 5;
        // (0, +-1) is the trivial module, classified as such
        let n = 1 + k / 5 + i32::from(lx2 == 0);
        let rho = h(lx2).to_f64() + n as f64;
        let (lx2, rho) = if k % 2 == 0 { (lx2, rho) } else { (-lx2, -rho) };
        let j_max = HalfInt::from_twice((2.0 * (rho.abs() - 1.0)).round() as i32);
        out.push((l(lx2, if k % 3 == 0 { -rho } else { rho }, 0.0), Classification::FiniteDimensional { j_max }));
    }
    for _ in 0..13 {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        out.push((l(rng.random_range(-4..=4), sign * rng.random_range(0.1..3.0), rng.random_range(0.1..3.0)), Classification::NonUnitaryInfinite));
    }
    out
}

fn classification(config: &Config) -> Vec<Check> {
    let anchor = "unitary classes: principal, complementary, trivial; finite-dimensional rho in +-(|lambda| + N)";
    let mut rng = config.rng("classification");
    let grid = class_grid(&mut rng);
    let wrong: Vec<String> = grid.iter().filter(|(l, c)| classify(l) != *c).map(|(l, c)| format!("{} expected {c:?}", describe(l))).collect();
    let name = if wrong.is_empty() {
        format!("classification mismatches on {} labels", grid.len())
    } else {
        format!("classification mismatches on {} labels: {}", grid.len(), wrong.join(", "))
    };
    let mut out = vec![Check::new(name, anchor, wrong.len() as f64, 0.0)];

    let mut dim_errors = 0usize;
    for lx2 in 0..=10 {
        let lambda = h(lx2);
        for omega in steps(lambda, h(10)) {
            let sum: usize = steps(lambda, omega).map(|j| (j.twice() + 1) as usize).sum();
            let module = TruncatedModule::new(IrrepLabel { lambda, rho: C64::new(omega.to_f64() + 1.0, 0.0) }, omega + HalfInt::ONE);
            let ok = matches!(finite_dim(lambda, omega), Ok(d) if d == sum) && matches!(module, Ok(m) if m.is_complete() && m.dim() == sum);
            if !ok {
                dim_errors += 1;
            }
        }
    }
    out.push(Check::new("finite_dim vs sum (2j+1), lambda, omega <= 5", anchor, dim_errors as f64, 0.0));

    let anchor2 = "pairs (lambda, rho) for which one output of F^A_{1/2} (x) V_{lambda,rho} is unitary";
    let mut table_errors = Vec::new();
    for a in [1i8, -1] {
        let mut cases: Vec<(Label, usize)> = Vec::new();
        for _ in 0..3 {
            let t: f64 = rng.random_range(0.2..3.0);
            let s: f64 = rng.random_range(0.05..0.95);
            let s = if rng.random_bool(0.5) { s } else { -s };
            for sign in [1.0, -1.0] {
                cases.push((IrrepLabel { lambda: HalfInt::ZERO, rho: C64::new(sign * 0.5, t) }, 1));
                let lambda = if sign > 0.0 { HalfInt::HALF } else { -HalfInt::HALF };
                cases.push((IrrepLabel { lambda, rho: C64::new(sign * 0.5 * a as f64 + s, 0.0) }, 1));
            }
            let generic = random_label(&mut rng, 4, 3.0, |l| l.rho.re.abs() > 0.6 && l.rho.im.abs() > 0.1);
            cases.push((generic, 0));
        }
        for (l, expect) in cases {
            let got = CouplingProblem::new(finite(HalfInt::HALF, a), l).and_then(|p| unitary_outputs(&p)).map(|u| u.len());
            if got.as_ref().ok() != Some(&expect) {
                table_errors.push(format!("A={a:+} {}", describe(&l)));
            }
        }
    }
    let name = if table_errors.is_empty() { "unitary-output report".to_string() } else { format!("unitary-output report, wrong for {}", table_errors.join(", ")) };
    out.push(Check::new(name, anchor2, table_errors.len() as f64, 0.0));
    out
}

// ---------------------------------------------------------------------------
// Supplementary

fn m_independence(config: &Config) -> Vec<Check> {
    let anchor = "Casimir eigenvalues are the same on each V^J_M";
    let mut rng = config.rng("m-independence");
    let mut out = Vec::new();
    for (gx2, a) in [(1, 1i8), (2, -1), (3, 1)] {
        let g = h(gx2);
        let l = random_label(&mut rng, 4, 3.0, |l| decomposable(finite(g, a), l));
        let name = format!("gamma={g} A={a:+} {}", describe(&l));
        let r = (|| -> Result<f64> {
            let p = CouplingProblem::new(finite(g, a), l)?;
            let big_j = top_admissible(l.lambda, g, l.lambda.abs() + g + HalfInt::from_int(2))?;
            let top = casimir_dense_block(&p, big_j, big_j)?.c1.eigenvalues()?;
            let mut worst = 0.0f64;
            for k in [1, 2] {
                let m = big_j - HalfInt::from_int(k);
                if m.abs() > big_j {
                    continue;
                }
                let block = casimir_dense_block(&p, big_j, m)?;
                let scale = 1f64.max(block.c1.max_abs());
                worst = worst.max(multiset_distance(&top, &block.c1.eigenvalues()?).unwrap_or(f64::INFINITY) / scale);
            }
            Ok(worst)
        })();
        out.push(r.map(|x| Check::new(&name, anchor, x, config.tol(1e-9))).unwrap_or_else(|e| Check::failed(&name, anchor, &e)));
    }
    out
}

fn distinctness(config: &Config) -> Vec<Check> {
    let anchor = "for rho not in +-(|lambda| + N) the pairs (i Lambda P, Lambda^2 + P^2 - 1) are distinct";
    let mut rng = config.rng("distinct");
    let mut collisions = 0usize;
    let mut total = 0usize;
    for gx2 in 1..=6 {
        let g = h(gx2);
        for a in [1i8, -1] {
            for _ in 0..5 {
                let l = random_label(&mut rng, 4, 3.0, |_| true);
                let p = CouplingProblem::new(finite(g, a), l).expect("infinite label");
                let pairs: Vec<(C64, C64)> = mrange(g).unwrap().into_iter().map(|nu| pair_for(&p, nu).casimirs()).collect();
                for (i, x) in pairs.iter().enumerate() {
                    for y in &pairs[i + 1..] {
                        total += 1;
                        if (x.0 - y.0).norm() < 1e-9 && (x.1 - y.1).norm() < 1e-9 {
                            collisions += 1;
                        }
                    }
                }
            }
        }
    }
    vec![Check::new(format!("coinciding Casimir pairs among {total} comparisons"), anchor, collisions as f64, config.tol(0.0))]
}

fn composite(config: &Config) -> Vec<Check> {
    let anchor = "(gamma_1, gamma_2) (x) V decomposed in two stages";
    let mut rng = config.rng("composite");
    let mut out = Vec::new();
    for (g1, g2) in [(h(1), h(1)), (h(2), h(1)), (h(1), h(2))] {
        let l = random_label(&mut rng, 2, 2.0, |l| decomposable(finite(g1, -1), l) && decomposable(finite(g2, 1), l));
        let name = format!("gamma1={g1} gamma2={g2} {}", describe(&l));
        let r = (|| -> Result<Vec<Check>> {
            let table = two_stage_cg(g1, g2, &l, l.lambda.abs() + HalfInt::from_int(4))?;
            let (mut res, mut spec, mut norm, mut dims) = (0.0f64, 0.0f64, 0.0f64, 0usize);
            for block in &table.blocks {
                let c = check_composite_block(&table, block)?;
                res = res.max(c.residual);
                spec = spec.max(c.spectrum);
                norm = norm.max(c.normalisation);
                if !c.dimension_ok {
                    dims += 1;
                }
            }
            Ok(vec![
                Check::new(format!("eigen-residual {name}"), anchor, res, config.tol(1e-9)),
                Check::new(format!("oracle spectrum {name}"), anchor, spec, config.tol(1e-8)),
                Check::new(format!("bilinear normalisation {name}"), anchor, norm, config.tol(1e-10)),
                Check::new(format!("dimension mismatches {name}"), anchor, dims as f64, 0.0),
            ])
        })();
        out.extend(collect(&name, anchor, r));
    }
    out
}

fn js_table(config: &Config) -> Vec<Check> {
    let anchor = "T^A and T~^A equal sqrt(lambda + A rho) times the gamma = 1/2 projections";
    let mut out = Vec::new();
    for l in js_labels(config) {
        for a in [1i8, -1] {
            let name = format!("{} A={a:+}", describe(&l));
            let r = js_reduced_elements(&l, a, l.lambda.abs() + HalfInt::from_int(6)).map(|[lo, hi]| {
                let t = (C64::new(l.lambda_t(), 0.0) + l.rho * a as f64).sqrt();
                let dev = (lo.value - t).norm().max((hi.value - t).norm()) / 1f64.max(t.norm());
                [dev, lo.scatter.max(hi.scatter)]
            });
            match r {
                Ok([dev, sc]) => {
                    out.push(Check::new(format!("reduced element {name}"), anchor, dev, config.tol(1e-10)));
                    out.push(Check::new(format!("scatter {name}"), anchor, sc, config.tol(1e-10)));
                }
                Err(e) => out.push(Check::failed(name, anchor, &e)),
            }
        }
    }
    out
}

/// Measured discrepancies reported alongside the checks.
pub fn notes() -> Vec<Note> {
    let mut out = Vec::new();
    let l = IrrepLabel { lambda: HalfInt::HALF, rho: C64::new(0.35, -0.8) };
    if let Ok(p) = CouplingProblem::new(finite(HalfInt::ONE, 1), l) {
        let mut dev = [0.0f64; 2];
        for big_j in jset_upto(l.lambda, p.gamma(), h(11)).unwrap_or_default() {
            let Ok(b) = casimir_block(&p, big_j) else { continue };
            for (k, reading) in [DiagonalReading::Literal, DiagonalReading::Amended].into_iter().enumerate() {
                if let Ok((_, c2)) = closed_form_block(&p, big_j, reading) {
                    dev[k] = dev[k].max(b.c2.to_dense().sub(&c2.to_dense()).max_abs());
                }
            }
        }
        out.push(Note {
            name: "closed-form C2 diagonal, term J(J+1) - j(J+1) as typeset".into(),
            value: dev[0],
            detail: format!("largest entry deviation from the compositional C2, gamma=1 A=+1 {} J <= 11/2", describe(&l)),
        });
        out.push(Note {
            name: "closed-form C2 diagonal, term J(J+1) - j(j+1)".into(),
            value: dev[1],
            detail: "same sample".into(),
        });
    }
    let l = IrrepLabel { lambda: HalfInt::ZERO, rho: C64::new(0.0, 2.0) };
    if let Ok((prod, target)) = js_normalisation_product(&l, 1) {
        out.push(Note {
            name: "t(lambda+1/2, rho+A/2) t~(lambda, rho) - (lambda + A rho) for t = t~ = sqrt(lambda + A rho)".into(),
            value: (prod - target).norm(),
            detail: format!("{} A=+1: product {:.6}{:+.6}i vs {:.6}{:+.6}i", describe(&l), prod.re, prod.im, target.re, target.im),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_matches_known_values() {
        let t = oracle::table(h(1), h(1));
        assert!((t[&(h(1), h(-1), h(2), h(0))] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((t[&(h(-1), h(1), h(0), h(0))] + 0.5f64.sqrt()).abs() < 1e-15);
        let t = oracle::table(h(2), h(1));
        assert!((t[&(h(0), h(1), h(1), h(1))] + (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn groups_are_deterministic() {
        let c = Config::default();
        let a = serde_json::to_string(&run_group("9", &c).unwrap()).unwrap();
        let b = serde_json::to_string(&run_group("9", &c).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(run_group("nope", &c).is_err());
    }

    #[test]
    fn tight_tolerance_reports_failures() {
        let c = Config { tolerance: Some(1e-20), ..Config::default() };
        let g = run_group("2", &c).unwrap();
        assert!(!g.passed);
        assert!(g.checks.iter().all(|x| x.residual.is_finite()));
    }
}
