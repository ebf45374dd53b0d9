use serde::{Deserialize, Serialize};

use crate::cloud::{validate, ParticleCloud};
use crate::reflections::{run_reflections, ReflectionOptions};
use crate::sym3::SymTraceFree3;
use crate::{Error, Result};

/// Which per-particle strains enter the work functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EinsteinOrder {
    /// Every particle sees the background strain `A`.
    First,
    /// Strains `Â_l` from the converged reflection series.
    Converged,
}

/// Excess rate of work `ΔW = μ Σ_l ⟨M_l(strains_l), A⟩`.
pub fn einstein_work(cloud: &ParticleCloud, strain: &SymTraceFree3, strains: &[SymTraceFree3], mu: f64) -> Result<f64> {
    if strains.len() != cloud.len() {
        return Err(Error::InvalidParameter(format!(
            "got {} strains for {} particles",
            strains.len(),
            cloud.len()
        )));
    }
    let sum: f64 = cloud.mobilities.iter().zip(strains).map(|(m, s)| m.apply(s).dot(strain)).sum();
    Ok(mu * sum)
}

/// `ΔW / (2μ A:A |K| φ)`, which is 5/2 for spheres at first order.
pub fn einstein_coefficient(cloud: &ParticleCloud, strain: &SymTraceFree3, order: EinsteinOrder) -> Result<f64> {
    einstein_coefficient_with(cloud, strain, order, &ReflectionOptions::default())
}

pub fn einstein_coefficient_with(
    cloud: &ParticleCloud,
    strain: &SymTraceFree3,
    order: EinsteinOrder,
    opts: &ReflectionOptions,
) -> Result<f64> {
    let stats = validate(cloud)?;
    if !(stats.phi_global > 0.0) {
        return Err(Error::InvalidParameter("volume fraction is zero".into()));
    }
    let aa = strain.dot(strain);
    if !(aa > 0.0) {
        return Err(Error::InvalidParameter("background strain is zero".into()));
    }
    let strains = match order {
        EinsteinOrder::First => vec![*strain; cloud.len()],
        EinsteinOrder::Converged => {
            let sol = run_reflections(cloud, *strain, opts)?;
            if !sol.converged {
                return Err(Error::Singular(format!(
                    "reflections did not converge in {} iterations",
                    sol.iterations
                )));
            }
            sol.a_hat
        }
    };
    let mu = 1.0;
    let work = einstein_work(cloud, strain, &strains, mu)?;
    Ok(work / (2.0 * mu * aa * cloud.bbox.volume() * stats.phi_global))
}
