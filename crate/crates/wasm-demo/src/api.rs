use serde_json::{json, Value};
use toeplitz_core::assembly::{Assembler, QuadConfig};
use toeplitz_core::spectra::{berezin_sequence, point_spectrum, spectrum_with_hull, PlanarRegion, RegionConfig};
use toeplitz_core::symbols::{PseudoHomogeneousSymbol, SymbolSpec};
use toeplitz_core::C64;

/// Largest degree the page may request; blocks grow like `d^(k-1)`.
pub const MAX_DEGREE: u32 = 24;
pub const MAX_RESOLUTION: usize = 512;

fn symbol(text: &str, k: usize) -> Result<PseudoHomogeneousSymbol, String> {
    let mut spec: Value = serde_json::from_str(text).map_err(|e| format!("symbol: {e}"))?;
    if let Some(obj) = spec.as_object_mut() {
        obj.entry("group").or_insert(json!(1));
    }
    let spec: SymbolSpec = serde_json::from_value(spec).map_err(|e| format!("symbol: {e}"))?;
    PseudoHomogeneousSymbol::new(spec, k).map_err(|e| e.to_string())
}

fn check_degree(d: u32) -> Result<(), String> {
    if d > MAX_DEGREE {
        return Err(format!("degree {d} exceeds the demo limit {MAX_DEGREE}"));
    }
    Ok(())
}

fn pair(z: C64) -> Value {
    json!([z.re, z.im])
}

fn region(r: &PlanarRegion) -> Value {
    json!({"area": r.area(), "rle": r.to_rle()})
}

pub fn block_spectrum(symbol_json: &str, k: usize, dmax: u32) -> Result<String, String> {
    check_degree(dmax)?;
    let c = symbol(symbol_json, k)?;
    let asm = Assembler::new(QuadConfig::default());
    let ps = point_spectrum(&asm, &c, dmax, None).map_err(|e| e.to_string())?;
    let points: Vec<Value> =
        ps.points().into_iter().map(|(z, d, m)| json!({"z": pair(z), "degree": d, "multiplicity": m})).collect();
    Ok(json!({"points": points}).to_string())
}

pub fn spectrum_hull(symbol_json: &str, k: usize, dmax: u32, resolution: usize) -> Result<String, String> {
    check_degree(dmax)?;
    if !(8..=MAX_RESOLUTION).contains(&resolution) {
        return Err(format!("resolution must lie in 8..={MAX_RESOLUTION}"));
    }
    let c = symbol(symbol_json, k)?;
    let asm = Assembler::new(QuadConfig::default());
    let rc = RegionConfig { resolution, ..RegionConfig::default() };
    let sh = spectrum_with_hull(&asm, &c, dmax, &rc).map_err(|e| e.to_string())?;
    let points: Vec<Value> = sh.point.points().into_iter().map(|(z, _, _)| pair(z)).collect();
    let outside = sh.hull.count_minus(&sh.spectrum).map_err(|e| e.to_string())?;
    Ok(json!({
        "points": points,
        "spectrum": region(&sh.spectrum),
        "hull": region(&sh.hull),
        "hull_minus_spectrum_cells": outside,
    })
    .to_string())
}

pub fn berezin(symbol_json: &str, k: usize, w_json: &str, degrees_json: &str) -> Result<String, String> {
    let c = symbol(symbol_json, k)?;
    let w: Vec<[f64; 2]> = serde_json::from_str(w_json).map_err(|e| format!("w: {e}"))?;
    let w: Vec<C64> = w.iter().map(|p| C64::new(p[0], p[1])).collect();
    let degrees: Vec<u32> = serde_json::from_str(degrees_json).map_err(|e| format!("degrees: {e}"))?;
    if degrees.iter().any(|&d| d > 4 * MAX_DEGREE) {
        return Err(format!("degrees must not exceed {}", 4 * MAX_DEGREE));
    }
    let asm = Assembler::new(QuadConfig::default());
    let p = berezin_sequence(&asm, &c, &w, &degrees).map_err(|e| e.to_string())?;
    let values: Vec<Value> = p.values.iter().map(|&z| pair(z)).collect();
    let errors: Vec<f64> = p.values.iter().map(|z| (z - p.limit).norm()).collect();
    Ok(json!({"degrees": p.degrees, "values": values, "limit": pair(p.limit), "errors": errors}).to_string())
}
