use super::{w2, W2Result};
use crate::catalog::{cd_lower_bound_isotropic, SolitonModel};
use crate::error::{Error, Result};
use crate::functionals::{fisher_information, relative_entropy, CheckOptions, FunctionalReport};
use crate::grid::Density;
use serde::{Deserialize, Serialize};

/// The HWI inequality and the log-Sobolev inequality it implies for one density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HwiReport {
    /// `value = W₂√I - (K/2)W₂²`, `bound = H`.
    pub hwi: FunctionalReport,
    /// `value = I/(2K)`, `bound = H`; not applicable unless `K > 0`.
    pub lsi: FunctionalReport,
    pub k: f64,
    pub w2: Option<W2Result>,
}

/// Check `H ≤ W₂√I - (K/2)W₂²` and `H ≤ I/(2K)` with `K` the sampled lower
/// bound of `Ric + Hess f` and `W₂` taken to the reference measure.
///
/// The discretisation error of `W₂` is carried into the tolerance of the HWI
/// verdict through `|∂/∂W₂| = |√I - K W₂|`.
pub fn hwi_gap(model: &SolitonModel, density: &Density, opts: &CheckOptions) -> Result<HwiReport> {
    let k = cd_lower_bound_isotropic(model, &model.sample_points(64))?.value;
    let label = density.describe();
    let blank = |id: &str| FunctionalReport::new(id, &model.id, label.clone(), model.tau);
    let w2 = match w2(model, density, &Density::reference(), &opts.grid) {
        Ok(r) => r,
        Err(Error::Unsupported(why)) => {
            return Ok(HwiReport {
                hwi: blank("hwi").not_applicable(why.clone()),
                lsi: blank("hwi:lsi").not_applicable(why),
                k,
                w2: None,
            })
        }
        Err(e) => return Err(e),
    };
    let grid = opts.build(model)?;
    let h = relative_entropy(model, &grid, density)?;
    let i = fisher_information(model, &grid, density)?;
    let w = w2.value;
    let rhs = w * i.sqrt() - 0.5 * k * w * w;
    let propagated = if w2.error_estimate.is_finite() {
        w2.error_estimate * (i.sqrt() - k * w).abs()
    } else {
        0.0
    };
    let mut hwi = blank("hwi").decide(rhs, h, opts.tolerance + propagated);
    hwi.h_value = Some(h);
    hwi.i_value = Some(i);
    if propagated > 0.0 {
        hwi = hwi.with_note(format!(
            "W2 = {w} by {:?}, error estimate {:.3e}",
            w2.method, w2.error_estimate
        ));
    }
    let mut lsi = if k > 0.0 {
        blank("hwi:lsi").decide(i / (2.0 * k), h, opts.tolerance)
    } else {
        blank("hwi:lsi").not_applicable(format!("K = {k} is not positive"))
    };
    lsi.h_value = Some(h);
    lsi.i_value = Some(i);
    Ok(HwiReport { hwi, lsi, k, w2: Some(w2) })
}
