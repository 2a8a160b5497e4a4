//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs without the libtest harness.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toeplitz_core::assembly::{max_abs, off_block_part, reference_matrix, Assembler, QuadConfig};
use toeplitz_core::gelfand::{evaluate_gelfand, sample_ideal_space, Coefficient, Generators, SamplingConfig};
use toeplitz_core::lattice::{GlobalBasis, PartitionConfig};
use toeplitz_core::radical::{decompose_by_division, is_semisimple, power_norms, radical_generator, SemisimpleVerdict};
use toeplitz_core::spectra::{berezin_sequence, is_inverse_closed, RegionConfig};
use toeplitz_core::symbols::{
    PseudoHomogeneousSymbol, ProfileSpec, QuasiRadialSpec, QuasiRadialSymbol, SymbolSpec,
};
use toeplitz_core::{Error, Result, C64};
use toeplitz_spectra::verify;
use toeplitz_spectra::{execute, Command, RunConfig};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict { passed, detail: detail.into() })
}

fn cfg(k: &[u32], lambda: f64) -> PartitionConfig {
    PartitionConfig::new(k.to_vec(), lambda).expect("valid partition")
}

/// `{n=2, k=(1,1)}`, `{n=3, k=(1,2)}`, `{n=4, k=(2,2)}`.
const CONFIGS: [&[u32]; 3] = [&[1, 1], &[1, 2], &[2, 2]];

fn sym(group: usize, kj: usize, profile: ProfileSpec, boundary: bool) -> PseudoHomogeneousSymbol {
    PseudoHomogeneousSymbol::new(SymbolSpec { group, profile, boundary_continuous: boundary }, kj).expect("valid symbol")
}

fn expr(e: &str) -> ProfileSpec {
    ProfileSpec::Expression { expr: e.into() }
}

fn quasi_homogeneous(p: &[i32]) -> ProfileSpec {
    ProfileSpec::QuasiHomogeneous { p: p.to_vec() }
}

fn random_profile<R: Rng>(rng: &mut R, kj: u32) -> ProfileSpec {
    if kj == 1 {
        return ProfileSpec::Constant { value: rng.gen_range(-2.0..2.0), imag: rng.gen_range(-1.0..1.0) };
    }
    match rng.gen_range(0..5) {
        0 => quasi_homogeneous(&[1, -1]),
        1 => quasi_homogeneous(&[-2, 2]),
        2 => ProfileSpec::PseudoHomogeneous { b: "s1^2 + s2".into(), p: vec![2, -2] },
        3 => expr("s1*s2*t1*conj(t2) + s1^2"),
        _ => expr("exp(i*pi*s1^2) + 0.5*s2"),
    }
}

fn random_quasi_radial<R: Rng>(rng: &mut R) -> QuasiRadialSymbol {
    let e = ["1 + r1^2", "exp(i*r2)*r1 + 0.25", "r1*r2 + 0.5", "cos(3*r1) + i*r2^3"][rng.gen_range(0..4)];
    QuasiRadialSymbol::new(QuasiRadialSpec::Expression { expr: e.into() }, 2).expect("valid quasi-radial symbol")
}

/// Five random `(a, c_1, c_2)` products per configuration.
fn random_products(k: &[u32], seed: u64) -> Vec<(QuasiRadialSymbol, Vec<PseudoHomogeneousSymbol>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..5)
        .map(|_| {
            let a = random_quasi_radial(&mut rng);
            let cs = k.iter().enumerate().map(|(j, &kj)| sym(j + 1, kj as usize, random_profile(&mut rng, kj), false)).collect();
            (a, cs)
        })
        .collect()
}

fn c1_quadrature() -> Result<Verdict> {
    let c = verify::dirichlet_check(200, 48, 4, 0xacce)?;
    verdict(c.passed, format!("max relative error {:.2e} (< 1e-10)", c.residual))
}

fn c2_identity() -> Result<Verdict> {
    let asm = Assembler::new(QuadConfig::default());
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for k in CONFIGS {
        for lambda in [0.0, 1.5] {
            let c = verify::identity_check(&asm, &GlobalBasis::new(&cfg(k, lambda), 10))?;
            ok &= c.passed;
            worst = worst.max(c.residual);
        }
    }
    verdict(ok, format!("worst deviation {worst:.2e}; |gamma - 1| < 1e-10, blocks within 1e-12"))
}

fn c3_orthogonality() -> Result<Verdict> {
    let asm = Assembler::new(QuadConfig::default());
    let mut worst: f64 = 0.0;
    for (i, k) in CONFIGS.iter().enumerate() {
        let basis = GlobalBasis::new(&cfg(k, 0.5), 6);
        for (a, cs) in random_products(k, 31 + i as u64) {
            let refs: Vec<&PseudoHomogeneousSymbol> = cs.iter().collect();
            let dense = reference_matrix(Some(&a), &refs, &basis, asm.quad())?;
            worst = worst.max(max_abs(&off_block_part(&dense, &basis)));
        }
    }
    verdict(worst < 1e-10, format!("max cross-block entry {worst:.2e} (< 1e-10), D = 6"))
}

fn c4_commutativity() -> Result<Verdict> {
    let asm = Assembler::new(QuadConfig::default());
    let (mut comm, mut prod): (f64, f64) = (0.0, 0.0);
    for (i, k) in CONFIGS.iter().enumerate() {
        let basis = GlobalBasis::new(&cfg(k, 0.5), 6);
        for (a, cs) in random_products(k, 31 + i as u64) {
            let refs: Vec<&PseudoHomogeneousSymbol> = cs.iter().collect();
            let (c, p) = verify::commutativity_residuals(&asm, Some(&a), &refs, &basis)?;
            comm = comm.max(c);
            prod = prod.max(p);
        }
    }
    verdict(comm < 1e-9 && prod < 1e-9, format!("max commutator {comm:.2e}, product identity {prod:.2e} (< 1e-9)"))
}

fn c5_brute_force() -> Result<Verdict> {
    let asm = Assembler::new(QuadConfig::default());
    let cs = vec![
        sym(1, 2, quasi_homogeneous(&[1, -1]), false),
        sym(1, 2, expr("s1^2*exp(i*pi*s2) + s1*s2*t1*conj(t2) + 0.5*s2^3*conj(t1)^2*t2^2"), false),
    ];
    let (worst, blocks) = verify::brute_force_deviation(&asm, &cs, 4)?;
    verdict(worst < 1e-6, format!("{blocks} blocks, max entry deviation {worst:.2e} (< 1e-6)"))
}

fn c6_tensor_eigenvectors() -> Result<Verdict> {
    let asm = Assembler::new(QuadConfig::default());
    let setups: Vec<(&[u32], Vec<PseudoHomogeneousSymbol>)> = vec![
        (&[2, 2], vec![sym(1, 2, quasi_homogeneous(&[1, -1]), false), sym(2, 2, expr("s1*s2*t1*conj(t2) + s1^2"), false)]),
        (&[1, 2], vec![sym(2, 2, ProfileSpec::PseudoHomogeneous { b: "s1^2 + s2".into(), p: vec![0, 0] }, false)]),
    ];
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for (k, cs) in setups {
        let g = Generators::new(&asm, Arc::new(GlobalBasis::new(&cfg(k, 0.0), 4)), &cs)?;
        let (w, n) = verify::tensor_eigenvector_residual(&g)?;
        worst = worst.max(w);
        points += n;
    }
    verdict(worst < 1e-9, format!("{points} joint eigen-tuples, max residual {worst:.2e} (< 1e-9)"))
}

fn c7_berezin() -> Result<Verdict> {
    let asm = Assembler::new(QuadConfig::default());
    let c = sym(1, 2, expr("s1^2"), true);
    let w = [C64::new(0.3, 0.0), C64::new(0.4, 0.0)];
    let probe = berezin_sequence(&asm, &c, &w, &[50, 100, 200])?;
    let err: Vec<f64> = probe.values.iter().map(|v| (v - 0.36).norm()).collect();
    verdict(
        err[1] < 0.02 && err[2] < err[0],
        format!("limit {:.4}; errors at d = 50, 100, 200: {:.2e}, {:.2e}, {:.2e}", probe.limit.re, err[0], err[1], err[2]),
    )
}

fn c8_hull() -> Result<Verdict> {
    let c = verify::hull_check(512);
    verdict(c.passed, c.detail)
}

fn c9_inverse_closed() -> Result<Verdict> {
    let asm = Assembler::new(QuadConfig::default());
    let rc = RegionConfig::default();
    let real = [sym(1, 2, expr("s1^2"), true), sym(2, 2, expr("s1*s2 + 0.5*cos(pi*s2)"), true)];
    let real_refs: Vec<&PseudoHomogeneousSymbol> = real.iter().collect();
    let r1 = is_inverse_closed(&asm, &real_refs, 8, &rc)?;
    let circ = sym(1, 2, expr("exp(2*pi*i*s1^2)"), true);
    let r2 = is_inverse_closed(&asm, &[&circ], 8, &rc)?;
    let cells = r2.groups[0].hull_minus_spectrum_cells;
    verdict(
        r1.inverse_closed && !r2.inverse_closed && cells > rc.cell_tolerance,
        format!(
            "real family inverse closed: {}; exp(2 pi i s1^2): {} with {cells} hull-minus-spectrum cells (area {:.3})",
            r1.inverse_closed, r2.inverse_closed, r2.groups[0].hull_minus_spectrum_area
        ),
    )
}

fn c10_semisimple() -> Result<Verdict> {
    let asm = Assembler::new(QuadConfig::default());
    let tol = toeplitz_core::radical::RANK_TOL;
    let b_only = [
        sym(1, 2, ProfileSpec::PseudoHomogeneous { b: "s1^2 + 2*s2".into(), p: vec![0, 0] }, false),
        sym(2, 2, expr("exp(i*s1) + s2^4"), false),
    ];
    let b_refs: Vec<&PseudoHomogeneousSymbol> = b_only.iter().collect();
    let nil = sym(1, 2, quasi_homogeneous(&[1, -1]), false);
    let mut ok = true;
    let mut notes = Vec::new();
    for t in [tol, tol / 2.0] {
        let r = is_semisimple(&asm, &b_refs, 8, t)?;
        let good = matches!(r.verdict, SemisimpleVerdict::SemisimpleUpTo { dmax: 8 } | SemisimpleVerdict::Structural { dmax: 8, .. });
        ok &= good;
        let n = is_semisimple(&asm, &[&nil], 8, t)?;
        let witness = matches!(n.verdict, SemisimpleVerdict::NotSemisimple { group: 0, degree: 1, .. });
        ok &= witness;
        notes.push(format!("tol {t:.1e}: b(s) semisimple {good}, p=(1,-1) witness (1,1) {witness}"));
    }
    verdict(ok, notes.join("; "))
}

fn c11_radical() -> Result<Verdict> {
    let asm = Assembler::new(QuadConfig::default());
    let k = [2u32, 2];
    let cs = vec![sym(1, 2, quasi_homogeneous(&[1, -1]), true), sym(2, 2, expr("s1^2"), true)];
    let g = Generators::new(&asm, Arc::new(GlobalBasis::new(&cfg(&k, 0.0), 6)), &cs)?;
    let sc = SamplingConfig { budget: 32, ..Default::default() };
    let samples = sample_ideal_space(&g, 6, &sc)?;
    let gen = radical_generator(&g, 0, &Coefficient::indicator(0, 1), 1, 6, sc.k_sur)?;
    let mut psi: f64 = 0.0;
    for p in &samples {
        psi = psi.max(evaluate_gelfand(&gen.sum, p)?.norm());
    }
    let norm = gen.operator.frobenius_norm();
    let powers = power_norms(&gen.operator, 6);
    let monotone = powers.windows(2).all(|w| w[1] <= w[0]);
    let surrogates = samples.iter().filter(|p| p.surrogate).count();
    verdict(
        psi < 1e-8 && norm > 1e-6 && monotone && samples.len() >= 500,
        format!(
            "{} points ({surrogates} surrogate): max |psi(G)| {psi:.2e}, ‖G‖_F {norm:.3e}, power norms {powers:.3?}",
            samples.len()
        ),
    )
}

fn c12_division() -> Result<Verdict> {
    let asm = Assembler::new(QuadConfig::default());
    let k = [2u32, 2];
    let cs = vec![
        sym(1, 2, expr("s1^2 + 0.3*s1*s2*(t1*conj(t2) + conj(t1)*t2)"), false),
        sym(2, 2, ProfileSpec::PseudoHomogeneous { b: "s1 + 2*s2^2".into(), p: vec![0, 0] }, false),
    ];
    let g = Generators::new(&asm, Arc::new(GlobalBasis::new(&cfg(&k, 0.0), 3)), &cs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xd17);
    let (mut residual, mut structural, mut ratio): (f64, bool, f64) = (0.0, true, 0.0);
    let (mut done, mut skipped, mut violations) = (0, 0, 0);
    while done < 50 {
        let j = rng.gen_range(0..2);
        let d = rng.gen_range(0..=3);
        let a = verify::random_sum(&mut rng, 2, j, 5);
        let dec = match decompose_by_division(&g, &a, j, d) {
            Ok(dec) => dec,
            Err(Error::IllConditioned { .. }) if skipped < 1000 => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        done += 1;
        residual = residual.max(dec.residual);
        structural &= dec.structural_ok;
        for (_, s, b) in dec.bounds() {
            let r = if b > 0.0 { s / b } else if s > 0.0 { f64::INFINITY } else { 0.0 };
            if r > 1.0 + verify::NORM_ROUNDING {
                violations += 1;
            }
            ratio = ratio.max(r);
        }
    }
    verdict(
        residual < 1e-9 && structural && violations == 0,
        format!(
            "50 instances ({skipped} ill-conditioned skipped): residual {residual:.2e} (< 1e-9), structural {structural}, max ‖S_l‖/(C_l‖A‖) {ratio:.3} ({violations} violations)"
        ),
    )
}

fn c13_projections() -> Result<Verdict> {
    let mut ok = true;
    let mut details = Vec::new();
    for k in CONFIGS {
        let c = verify::projection_check(&GlobalBasis::new(&cfg(k, 0.0), 6))?;
        ok &= c.passed;
        if !c.passed {
            details.push(c.detail);
        }
    }
    verdict(ok, if ok { "all mask identities exact on three configurations".into() } else { details.join("; ") })
}

fn desk_config() -> RunConfig {
    RunConfig::from_json(
        r#"{
            "partition": {"k": [2, 2], "lambda": 0.5},
            "quasi_radial": {"kind": "expression", "expr": "1 + r1^2"},
            "symbols": [
                {"group": 1, "profile": {"kind": "quasi_homogeneous", "p": [1, -1]}, "boundary_continuous": true},
                {"group": 2, "profile": {"kind": "expression", "expr": "s1^2"}, "boundary_continuous": true}
            ],
            "dmax": 4,
            "regions": {"resolution": 128},
            "verify": {"dirichlet_draws": 20, "division_draws": 10, "seed": 7}
        }"#,
    )
    .expect("valid desk config")
}

fn c14_determinism() -> Result<Verdict> {
    let cfg = desk_config();
    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut payloads = Vec::new();
    for threads in [1, 4, max] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        let out = pool.install(|| execute(Command::Verify, &cfg, &Assembler::new(cfg.quadrature)))?;
        payloads.push((threads, serde_json::to_string(&out.payload).expect("payload serializes"), out.failed));
    }
    let same = payloads.windows(2).all(|w| w[0].1 == w[1].1);
    let failed: Vec<usize> = payloads.iter().filter(|p| p.2).map(|p| p.0).collect();
    verdict(
        same,
        format!(
            "threads 1, 4, {max}: payloads identical {same} ({} bytes); checks failing inside verify: {}",
            payloads[0].1.len(),
            if failed.is_empty() { "none".to_string() } else { format!("at thread counts {failed:?}") }
        ),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Result<Verdict>)> = vec![
        ("1 quadrature oracle", c1_quadrature),
        ("2 identity symbol", c2_identity),
        ("3 block orthogonality", c3_orthogonality),
        ("4 commutativity and product identity", c4_commutativity),
        ("5 brute-force inner products", c5_brute_force),
        ("6 tensor eigenvectors", c6_tensor_eigenvectors),
        ("7 Berezin limit", c7_berezin),
        ("8 hull correctness", c8_hull),
        ("9 inverse-closedness classifier", c9_inverse_closed),
        ("10 semisimplicity", c10_semisimple),
        ("11 radical generators", c11_radical),
        ("12 division reconstruction", c12_division),
        ("13 projection algebra", c13_projections),
        ("14 determinism", c14_determinism),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (name, f) in criteria {
        if !only.is_empty() && !only.iter().any(|o| name.split(' ').next() == Some(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(v) => (v.passed, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        println!("{} criterion {name}: {detail} [{secs:.1}s]", if passed { "PASS" } else { "FAIL" });
        if !passed {
            failures += 1;
        }
    }
    if failures > 0 {
        println!("{failures} criterion/criteria failed");
        std::process::exit(1);
    }
}
