//! One function per subcommand. Each returns a deterministic JSON payload,
//! warnings and side files; nothing here touches the filesystem.

use std::fmt::Write as _;
use std::sync::Arc;

use serde_json::{json, Value};
use toeplitz_core::assembly::{spectral_norm, Assembler, TruncatedOperator};
use toeplitz_core::gelfand::{
    evaluate_all, sample_ideal_space, spectral_radius_estimate, Coefficient, FiniteSum, Generators,
};
use toeplitz_core::lattice::{enumerate_block_indices, GlobalBasis};
use toeplitz_core::radical::{
    decompose_by_division, is_semisimple, power_norms, radical_generator, SemisimpleReport, SemisimpleVerdict,
};
use toeplitz_core::spectra::{
    accumulation_check, berezin_sequence, cluster, is_inverse_closed, point_spectrum, spectrum_with_hull,
    PlanarRegion, RegionConfig, Window, CLUSTER_REL,
};
use toeplitz_core::symbols::{PseudoHomogeneousSymbol, QuasiRadialSymbol};
use toeplitz_core::{Error, Result, C64};

use crate::config::{RadicalSpec, RunConfig};
use crate::verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Assemble,
    Spectrum,
    Hull,
    Berezin,
    Gelfand,
    Semisimple,
    Radical,
    Verify,
    Info,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Assemble => "assemble",
            Command::Spectrum => "spectrum",
            Command::Hull => "hull",
            Command::Berezin => "berezin",
            Command::Gelfand => "gelfand",
            Command::Semisimple => "semisimple",
            Command::Radical => "radical",
            Command::Verify => "verify",
            Command::Info => "info",
        }
    }
}

/// Result of a command before it is wrapped in a report.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub payload: Value,
    pub warnings: Vec<String>,
    /// `(file name, contents)` written next to the report.
    pub files: Vec<(String, String)>,
    /// A verification check failed.
    pub failed: bool,
}

/// Parsed configuration objects shared by the commands.
pub(crate) struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub asm: &'a Assembler,
    pub symbols: Vec<PseudoHomogeneousSymbol>,
    pub a: Option<QuasiRadialSymbol>,
    pub basis: Arc<GlobalBasis>,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a RunConfig, asm: &'a Assembler) -> Result<Self> {
        Ok(Context {
            cfg,
            asm,
            symbols: cfg.symbol_objects()?,
            a: cfg.quasi_radial_object()?,
            basis: Arc::new(GlobalBasis::new(&cfg.partition, cfg.dmax)),
        })
    }

    pub fn symbol_refs(&self) -> Vec<&PseudoHomogeneousSymbol> {
        self.symbols.iter().collect()
    }

    pub fn generators(&self) -> Result<Generators> {
        Generators::new(self.asm, self.basis.clone(), &self.symbols)
    }
}

pub fn execute(cmd: Command, cfg: &RunConfig, asm: &Assembler) -> Result<Outcome> {
    let ctx = Context::new(cfg, asm)?;
    match cmd {
        Command::Assemble => assemble(&ctx),
        Command::Spectrum => spectrum(&ctx),
        Command::Hull => hull(&ctx),
        Command::Berezin => berezin(&ctx),
        Command::Gelfand => gelfand(&ctx),
        Command::Semisimple => semisimple(&ctx),
        Command::Radical => radical(&ctx),
        Command::Verify => verify::run(&ctx),
        Command::Info => Ok(info(&ctx)),
    }
}

pub fn info_without_config() -> Outcome {
    Outcome {
        payload: json!({
            "tool": "toeplitz-spectra",
            "commands": ["assemble", "spectrum", "hull", "berezin", "gelfand", "semisimple", "radical", "verify", "info"],
            "cache_env": crate::cache::CACHE_ENV,
            "exit_codes": {"ok": 0, "config": 1, "numerical": 2, "verification": 3},
        }),
        ..Outcome::default()
    }
}

fn info(ctx: &Context) -> Outcome {
    let cfg = &ctx.cfg.partition;
    let mut out = info_without_config();
    out.payload["partition"] = json!({
        "n": cfg.n(),
        "m": cfg.m(),
        "k": cfg.k(),
        "lambda": cfg.lambda(),
    });
    out.payload["truncation"] = json!({
        "cap": ctx.basis.cap(),
        "dim": ctx.basis.dim(),
        "blocks": ctx.basis.kappas().len(),
    });
    out.payload["symbols"] = ctx
        .symbols
        .iter()
        .map(|c| {
            json!({
                "group": c.group() + 1,
                "key": c.canonical_key(),
                "t_free": c.is_t_free(),
                "single_nonzero_mode": c.is_single_nonzero_mode(),
                "boundary_continuous": c.boundary_continuous(),
            })
        })
        .collect();
    out
}

fn c64(z: C64) -> Value {
    json!([z.re, z.im])
}

/// Entry `(row, col)` of a block is `<T e_col, e_row>`; its Fourier mode is
/// `row - col`.
fn block_pattern(c: &PseudoHomogeneousSymbol, d: u32, m: &toeplitz_core::CMatrix) -> (Vec<String>, Option<bool>) {
    let scale = 1e-12 * (1.0 + toeplitz_core::assembly::max_abs(m));
    let support = c.declared_support();
    let idx = enumerate_block_indices(c.kj() as u32, d);
    let mut rows = Vec::with_capacity(m.nrows());
    let mut consistent = true;
    for r in 0..m.nrows() {
        let mut line = String::with_capacity(m.ncols());
        for col in 0..m.ncols() {
            let nonzero = m[(r, col)].norm() > scale;
            line.push(if nonzero { 'x' } else { '.' });
            if nonzero {
                if let Some(s) = &support {
                    let mode: Vec<i32> = idx.get(r).iter().zip(idx.get(col)).map(|(&b, &a)| b as i32 - a as i32).collect();
                    consistent &= s.contains(&mode);
                }
            }
        }
        rows.push(line);
    }
    (rows, support.map(|_| consistent))
}

fn assemble(ctx: &Context) -> Result<Outcome> {
    let mut warnings = Vec::new();
    let mut groups = Vec::new();
    for c in &ctx.symbols {
        let mut degrees = Vec::new();
        for d in 0..=ctx.cfg.dmax {
            let b = ctx.asm.block(c, d)?;
            let (pattern, consistent) = block_pattern(c, d, &b.matrix);
            if consistent == Some(false) {
                warnings.push(format!("group {} degree {d}: nonzero entry outside the declared Fourier support", c.group() + 1));
            }
            degrees.push(json!({
                "degree": d,
                "dim": b.dim(),
                "order": b.order,
                "frobenius_norm": b.matrix.norm(),
                "spectral_norm": spectral_norm(&b.matrix),
                "pattern": if b.dim() <= 16 { json!(pattern) } else { Value::Null },
                "support_consistent": consistent,
            }));
        }
        groups.push(json!({ "group": c.group() + 1, "key": c.canonical_key(), "degrees": degrees }));
    }
    let refs = ctx.symbol_refs();
    let op = ctx.asm.truncated(ctx.a.as_ref(), &refs, &ctx.basis)?;
    let dist = op.sub(&TruncatedOperator::identity(ctx.basis.clone())).frobenius_norm();
    Ok(Outcome {
        payload: json!({
            "truncation": { "cap": ctx.basis.cap(), "dim": ctx.basis.dim(), "blocks": ctx.basis.kappas().len() },
            "groups": groups,
            "operator": {
                "label": op.label(),
                "frobenius_norm": op.frobenius_norm(),
                "spectral_norm": op.spectral_norm(),
                "distance_to_identity_frobenius": dist,
            },
        }),
        warnings,
        ..Outcome::default()
    })
}

fn spectrum(ctx: &Context) -> Result<Outcome> {
    let mut csv = String::from("re,im,j,d,multiplicity\n");
    let mut groups = Vec::new();
    let mut all: Vec<C64> = Vec::new();
    for c in &ctx.symbols {
        let ps = point_spectrum(ctx.asm, c, ctx.cfg.dmax, None)?;
        for (z, d, k) in ps.points() {
            let _ = writeln!(csv, "{:.17e},{:.17e},{},{d},{k}", z.re, z.im, c.group() + 1);
            all.push(z);
        }
        let degrees: Vec<Value> = ps
            .per_degree
            .iter()
            .map(|e| {
                json!({
                    "degree": e.degree,
                    "tol": e.tol,
                    "eigenvalues": e.eigenvalues.iter().map(|&(z, k)| json!([z.re, z.im, k])).collect::<Vec<_>>(),
                })
            })
            .collect();
        groups.push(json!({ "group": c.group() + 1, "degrees": degrees }));
    }
    let scale = all.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let distinct: Vec<Value> = cluster(&all, CLUSTER_REL * (1.0 + scale)).into_iter().map(|(z, _)| c64(z)).collect();
    let mut payload = json!({ "groups": groups, "distinct": distinct });
    if let Some(a) = &ctx.a {
        let gammas = ctx.asm.gamma_table(a, &ctx.basis)?;
        payload["quasi_radial"] = ctx
            .basis
            .kappas()
            .iter()
            .zip(gammas)
            .map(|(k, g)| json!({ "kappa": k, "gamma": c64(g) }))
            .collect();
    }
    let mut warnings = Vec::new();
    if ctx.symbols.is_empty() && ctx.a.is_none() {
        warnings.push("no symbols configured; nothing to compute".into());
    }
    Ok(Outcome {
        files: vec![("spectrum.csv".into(), csv), ("spectrum.svg".into(), scatter_svg(&all))],
        payload,
        warnings,
        ..Outcome::default()
    })
}

fn scatter_svg(points: &[C64]) -> String {
    let w = Window::around(points, 0.1, 1e-3);
    let mut s = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 512 512\" width=\"512\" height=\"512\">\n\
         <rect width=\"512\" height=\"512\" fill=\"white\"/>\n",
    );
    for z in points {
        let x = (z.re - w.xmin) / w.extent * 512.0;
        let y = 512.0 - (z.im - w.ymin) / w.extent * 512.0;
        let _ = writeln!(s, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"2\" fill=\"black\"/>");
    }
    s.push_str("</svg>\n");
    s
}

/// Resolution of the drift pass: twice the configured grid.
pub fn drift_resolution(rc: &RegionConfig) -> usize {
    2 * rc.resolution
}

fn hull(ctx: &Context) -> Result<Outcome> {
    let rc = ctx.cfg.regions;
    let mut warnings = Vec::new();
    let mut files = Vec::new();
    let mut groups = Vec::new();
    let usable: Vec<&PseudoHomogeneousSymbol> = ctx
        .symbols
        .iter()
        .filter(|c| {
            if !c.boundary_continuous() {
                warnings.push(format!(
                    "group {}: symbol is not declared boundary continuous; no essential spectrum estimate",
                    c.group() + 1
                ));
            }
            c.boundary_continuous()
        })
        .collect();
    for c in &usable {
        let sh = spectrum_with_hull(ctx.asm, c, ctx.cfg.dmax, &rc)?;
        let fine_rc = RegionConfig { resolution: drift_resolution(&rc), ..rc };
        let fine = spectrum_with_hull(ctx.asm, c, ctx.cfg.dmax, &fine_rc)?;
        let radius = 10.0 * sh.point.per_degree.iter().map(|e| e.tol).fold(0.0, f64::max);
        let acc = accumulation_check(&sh.point, &sh.essential, radius, ctx.cfg.tolerances.accumulation_degrees, 1e-6);
        if !acc.violations.is_empty() {
            warnings.push(format!(
                "group {}: {} accumulation point(s) of the point spectrum lie away from the essential spectrum estimate",
                c.group() + 1,
                acc.violations.len()
            ));
        }
        let cells = sh.hull.count_minus(&sh.spectrum)?;
        let j = c.group() + 1;
        files.push((format!("hull_g{j}.svg"), sh.hull.to_svg("#4a78b5")));
        files.push((format!("spectrum_g{j}.svg"), sh.spectrum.to_svg("#b5544a")));
        files.push((format!("hull_g{j}.json"), rle_json(&sh.hull)));
        files.push((format!("spectrum_g{j}.json"), rle_json(&sh.spectrum)));
        groups.push(json!({
            "group": j,
            "window": sh.hull.window,
            "resolution": rc.resolution,
            "essential_area": sh.essential.area(),
            "spectrum_area": sh.spectrum.area(),
            "hull_area": sh.hull.area(),
            "hull_minus_spectrum_cells": cells,
            "polynomially_convex": cells <= rc.cell_tolerance,
            "drift": {
                "resolution": fine_rc.resolution,
                "hull_area": fine.hull.area(),
                "hull_area_drift": (fine.hull.area() - sh.hull.area()).abs(),
                "spectrum_area_drift": (fine.spectrum.area() - sh.spectrum.area()).abs(),
            },
            "accumulation": acc,
        }));
    }
    let closed = is_inverse_closed(ctx.asm, &usable, ctx.cfg.dmax, &rc)?;
    Ok(Outcome {
        payload: json!({
            "groups": groups,
            "inverse_closed": closed.inverse_closed,
            "cell_tolerance": closed.cell_tolerance,
        }),
        warnings,
        files,
        ..Outcome::default()
    })
}

fn rle_json(r: &PlanarRegion) -> String {
    serde_json::to_string(&r.to_rle()).expect("regions serialize")
}

fn berezin(ctx: &Context) -> Result<Outcome> {
    let spec = ctx.cfg.berezin.as_ref().ok_or_else(|| Error::Config("the berezin command needs a `berezin` section".into()))?;
    let c = ctx
        .symbols
        .iter()
        .find(|c| c.group() + 1 == spec.group)
        .ok_or_else(|| Error::Config(format!("no symbol on group {}", spec.group)))?;
    let probe = berezin_sequence(ctx.asm, c, &spec.w, &spec.degrees)?;
    let errors: Vec<f64> = probe.values.iter().map(|v| (v - probe.limit).norm()).collect();
    Ok(Outcome { payload: json!({ "probe": probe, "errors": errors }), ..Outcome::default() })
}

fn default_sums(m: usize, symbols: &[PseudoHomogeneousSymbol]) -> Vec<FiniteSum> {
    symbols.iter().map(|c| FiniteSum::generator(c.group(), m)).collect()
}

fn gelfand(ctx: &Context) -> Result<Outcome> {
    let m = ctx.cfg.m();
    let sums = match &ctx.cfg.gelfand {
        Some(g) => g.sums.clone(),
        None => default_sums(m, &ctx.symbols),
    };
    let g = ctx.generators()?;
    let samples = sample_ideal_space(&g, ctx.cfg.dmax, &ctx.cfg.sampling)?;
    let surrogates = samples.iter().filter(|p| p.surrogate).count();
    let mut rows = Vec::new();
    let mut per_sum = Vec::new();
    for (i, a) in sums.iter().enumerate() {
        let values = evaluate_all(a, &samples)?;
        let op = g.assemble(a)?;
        let truncated_radius = op
            .blocks()
            .iter()
            .map(|b| toeplitz_core::spectra::eigenvalues(b).map(|v| v.iter().map(|z| z.norm()).fold(0.0, f64::max)))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        per_sum.push(json!({
            "index": i,
            "gelfand_radius_estimate": spectral_radius_estimate(a, &samples)?,
            "truncated_spectral_radius": truncated_radius,
        }));
        rows.push(json!({ "index": i, "points": values }));
    }
    let mut warnings = Vec::new();
    if surrogates > 0 {
        warnings.push(format!(
            "{surrogates} point(s) are approximate surrogates for limit functionals, evaluated at K_sur = {}",
            ctx.cfg.sampling.k_sur
        ));
    }
    Ok(Outcome {
        payload: json!({
            "points": samples.len(),
            "exact_points": samples.len() - surrogates,
            "surrogate_points": surrogates,
            "sums": per_sum,
        }),
        files: vec![("gelfand_points.json".into(), serde_json::to_string(&rows).expect("values serialize"))],
        warnings,
        ..Outcome::default()
    })
}

pub(crate) fn semisimple_pair(ctx: &Context) -> Result<(SemisimpleReport, SemisimpleReport)> {
    let refs = ctx.symbol_refs();
    let tol = ctx.cfg.tolerances.rank;
    Ok((is_semisimple(ctx.asm, &refs, ctx.cfg.dmax, tol)?, is_semisimple(ctx.asm, &refs, ctx.cfg.dmax, tol / 2.0)?))
}

fn semisimple(ctx: &Context) -> Result<Outcome> {
    let (base, halved) = semisimple_pair(ctx)?;
    let stable = base.verdict == halved.verdict;
    let mut warnings = base.warnings.clone();
    if !stable {
        warnings.push("semisimplicity verdict changes when the rank threshold is halved".into());
    }
    let witness = match &base.verdict {
        SemisimpleVerdict::NotSemisimple { group, degree, .. } => json!({ "group": group + 1, "degree": degree }),
        _ => Value::Null,
    };
    Ok(Outcome {
        payload: json!({
            "semisimple": base.verdict.is_semisimple(),
            "witness": witness,
            "report": base,
            "halved_tolerance": halved,
            "stable": stable,
        }),
        warnings,
        ..Outcome::default()
    })
}

/// `1_{κ_j = 1}` at level 1 on the first group carrying a symbol.
fn default_radical(ctx: &Context) -> Result<RadicalSpec> {
    let c = ctx.symbols.first().ok_or_else(|| Error::Config("the radical command needs at least one symbol".into()))?;
    Ok(RadicalSpec { group: c.group() + 1, gamma: Coefficient::indicator(c.group(), 1), level: 1, kmax: 6 })
}

fn radical(ctx: &Context) -> Result<Outcome> {
    let spec = match &ctx.cfg.radical {
        Some(s) => s.clone(),
        None => default_radical(ctx)?,
    };
    let (report, _) = semisimple_pair(ctx)?;
    let g = ctx.generators()?;
    let j = spec.group - 1;
    let gen = radical_generator(&g, j, &spec.gamma, spec.level, ctx.cfg.dmax, ctx.cfg.sampling.k_sur)?;
    let powers = power_norms(&gen.operator, spec.kmax);
    let monotone = powers.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-12);
    let samples = sample_ideal_space(&g, ctx.cfg.dmax, &ctx.cfg.sampling)?;
    let max_psi = spectral_radius_estimate(&gen.sum, &samples)?;
    let mut payload = json!({
        "semisimple": report,
        "generator": {
            "group": spec.group,
            "level": spec.level,
            "degrees": gen.degrees,
            "f_l_status": gen.status,
            "frobenius_norm": gen.operator.frobenius_norm(),
            "spectral_norm": gen.operator.spectral_norm(),
            "power_norms": powers,
            "power_norms_nonincreasing": monotone,
            "max_abs_gelfand": max_psi,
            "sampled_points": samples.len(),
        },
    });
    let mut warnings = report.warnings.clone();
    if gen.degrees.is_empty() {
        warnings.push("no degree up to dmax has at most L distinct eigenvalues; the generator is zero".into());
    }
    if let Some(div) = &ctx.cfg.division {
        let dj = div.group - 1;
        let dec = decompose_by_division(&g, &div.sum, dj, div.degree)?;
        let bounds: Vec<Value> = dec
            .bounds()
            .into_iter()
            .map(|(l, s, b)| json!({ "level": l, "s_norm": s, "bound": b, "holds": s <= b * (1.0 + verify::NORM_ROUNDING) }))
            .collect();
        payload["division"] = json!({
            "group": div.group,
            "degree": div.degree,
            "roots": dec.roots.iter().map(|&z| c64(z)).collect::<Vec<_>>(),
            "residual": dec.residual,
            "structural_ok": dec.structural_ok,
            "constants": dec.constants,
            "bounds": bounds,
        });
    }
    Ok(Outcome { payload, warnings, ..Outcome::default() })
}
