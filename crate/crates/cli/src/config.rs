//! Run configuration: one JSON document, validated and echoed with
//! defaults filled in.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toeplitz_core::assembly::QuadConfig;
use toeplitz_core::gelfand::{Coefficient, FiniteSum, SamplingConfig};
use toeplitz_core::lattice::PartitionConfig;
use toeplitz_core::spectra::RegionConfig;
use toeplitz_core::symbols::{PseudoHomogeneousSymbol, QuasiRadialSpec, QuasiRadialSymbol, SymbolSpec};
use toeplitz_core::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub partition: PartitionConfig,
    #[serde(default)]
    pub quasi_radial: Option<QuasiRadialSpec>,
    /// At most one symbol per group.
    #[serde(default)]
    pub symbols: Vec<SymbolSpec>,
    #[serde(default = "default_dmax")]
    pub dmax: u32,
    #[serde(default)]
    pub quadrature: QuadConfig,
    #[serde(default)]
    pub regions: RegionConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub berezin: Option<BerezinSpec>,
    #[serde(default)]
    pub gelfand: Option<GelfandSpec>,
    #[serde(default)]
    pub radical: Option<RadicalSpec>,
    #[serde(default)]
    pub division: Option<DivisionSpec>,
    #[serde(default)]
    pub verify: VerifySpec,
}

fn default_dmax() -> u32 {
    6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative singular-value threshold for diagonalizability.
    pub rank: f64,
    /// Eigenvalues from this many distinct degrees make an accumulation
    /// candidate.
    pub accumulation_degrees: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rank: toeplitz_core::radical::RANK_TOL, accumulation_degrees: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerezinSpec {
    /// 1-based.
    pub group: usize,
    pub w: Vec<C64>,
    pub degrees: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GelfandSpec {
    pub sums: Vec<FiniteSum>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadicalSpec {
    /// 1-based.
    pub group: usize,
    pub gamma: Coefficient,
    pub level: usize,
    #[serde(default = "default_kmax")]
    pub kmax: u32,
}

fn default_kmax() -> u32 {
    6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivisionSpec {
    /// 1-based.
    pub group: usize,
    pub degree: u32,
    pub sum: FiniteSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub dirichlet_draws: usize,
    pub division_draws: usize,
    pub seed: u64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { dirichlet_draws: 20, division_draws: 10, seed: 7 }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            Error::Config(msg.strip_prefix("invalid configuration: ").unwrap_or(&msg).to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn m(&self) -> usize {
        self.partition.m()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        let check_group = |g: usize, what: &str| {
            if g == 0 || g > m {
                Err(Error::Config(format!("{what} refers to group {g}; groups are 1..={m}")))
            } else {
                Ok(())
            }
        };
        let mut seen = vec![false; m];
        for s in &self.symbols {
            check_group(s.group, "symbol")?;
            if std::mem::replace(&mut seen[s.group - 1], true) {
                return Err(Error::Config(format!("more than one symbol on group {}", s.group)));
            }
        }
        self.symbol_objects()?;
        self.quasi_radial_object()?;
        if let Some(b) = &self.berezin {
            check_group(b.group, "berezin")?;
            if b.w.len() != self.partition.kj(b.group - 1) as usize {
                return Err(Error::Config("berezin.w must have k_j coordinates".into()));
            }
        }
        if let Some(g) = &self.gelfand {
            for s in &g.sums {
                s.validate(m)?;
            }
        }
        if let Some(r) = &self.radical {
            check_group(r.group, "radical")?;
            r.gamma.validate(m)?;
        }
        if let Some(d) = &self.division {
            check_group(d.group, "division")?;
            d.sum.validate(m)?;
            if d.degree > self.dmax {
                return Err(Error::Config(format!("division degree {} exceeds dmax {}", d.degree, self.dmax)));
            }
        }
        if self.sampling.budget == 0 {
            return Err(Error::Config("sampling.budget must be at least 1".into()));
        }
        if self.regions.resolution < 8 {
            return Err(Error::Config("regions.resolution must be at least 8".into()));
        }
        Ok(())
    }

    pub fn symbol_objects(&self) -> Result<Vec<PseudoHomogeneousSymbol>> {
        self.symbols
            .iter()
            .map(|s| {
                let kj = self.partition.kj(s.group - 1) as usize;
                PseudoHomogeneousSymbol::new(s.clone(), kj)
            })
            .collect()
    }

    pub fn quasi_radial_object(&self) -> Result<Option<QuasiRadialSymbol>> {
        self.quasi_radial.as_ref().map(|a| QuasiRadialSymbol::new(a.clone(), self.m())).transpose()
    }

    /// Canonical JSON of the effective configuration.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("configuration serializes")
    }
}
