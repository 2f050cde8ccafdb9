use serde::{Deserialize, Serialize};

use super::PipelineError;

/// Prediction targets per update for next-token prediction over `views`
/// sequence views against masked prediction at ratio `rho`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub rho: f64,
    pub views: u32,
    pub t_avg: f64,
    pub sd_ntp: f64,
    pub sd_mnp: f64,
    pub targets_ntp: f64,
    pub targets_mnp: f64,
    pub ratio: f64,
}

pub fn supervision_density(rho: f64, views: u32, t_avg: f64) -> Result<DensityReport, PipelineError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(PipelineError::InvalidArgument(format!("rho must lie in (0, 1), got {rho}")));
    }
    if views == 0 {
        return Err(PipelineError::InvalidArgument("views must be positive".into()));
    }
    if !(t_avg > 0.0 && t_avg.is_finite()) {
        return Err(PipelineError::InvalidArgument(format!("t_avg must be positive, got {t_avg}")));
    }
    let views_f = f64::from(views);
    Ok(DensityReport {
        rho,
        views,
        t_avg,
        sd_ntp: 1.0,
        sd_mnp: rho,
        targets_ntp: views_f * t_avg,
        targets_mnp: rho * t_avg,
        // T_avg cancels; dividing directly keeps the result exact
        ratio: views_f / rho,
    })
}
