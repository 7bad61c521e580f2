//! Gridded efficiency maps, the long-format CSV map file, and analytical
//! map reconstruction.
//!
//! The speed axis is kept in rpm exactly as tabulated so that a map survives
//! a save/load cycle bit for bit; [`EfficiencyMap::omega`] converts to rad/s.

use std::fmt::Write as _;
use std::path::Path;

use crate::loss_model::{efficiency, LossCoefficients, MachineLimits, MachinePoint};
use crate::units::rpm_to_rad_s;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EfficiencyMap {
    speed_rpm: Vec<f64>,
    torque_nm: Vec<f64>,
    /// Speed-major; `None` marks cells outside the envelope.
    eta: Vec<Option<f64>>,
    limits: Option<MachineLimits>,
}

fn strictly_ascending(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

impl EfficiencyMap {
    pub fn new(
        speed_rpm: Vec<f64>,
        torque_nm: Vec<f64>,
        eta: Vec<Option<f64>>,
        limits: Option<MachineLimits>,
    ) -> Result<Self> {
        if speed_rpm.is_empty() || torque_nm.is_empty() {
            return Err(Error::EmptyInput("efficiency map grid is empty"));
        }
        if !strictly_ascending(&speed_rpm) || !strictly_ascending(&torque_nm) {
            return Err(Error::parse("efficiency map", "grid is not strictly ascending"));
        }
        if speed_rpm[0] < 0.0 || torque_nm[0] < 0.0 {
            return Err(Error::parse("efficiency map", "negative speed or torque in grid"));
        }
        if eta.len() != speed_rpm.len() * torque_nm.len() {
            return Err(Error::parse("efficiency map", "cell count does not match grid"));
        }
        if let Some(e) = eta.iter().flatten().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::parse("efficiency map", format!("efficiency {e} outside [0, 1]")));
        }
        let map = Self {
            speed_rpm,
            torque_nm,
            eta,
            limits,
        };
        if let Some(l) = &map.limits {
            for i in 0..map.n_speed() {
                let cap = l.peak_torque(map.omega(i)) * (1.0 + 1e-12);
                if map.omega(i) > l.omega_max * (1.0 + 1e-12) && map.column(i).any(|c| c.is_some()) {
                    return Err(Error::parse("efficiency map", "valid cell above maximum speed"));
                }
                for j in 0..map.n_torque() {
                    if map.torque_nm[j] > cap && map.eta(i, j).is_some() {
                        return Err(Error::parse(
                            "efficiency map",
                            format!("valid cell outside the torque envelope at {} rpm", map.speed_rpm[i]),
                        ));
                    }
                }
            }
        }
        Ok(map)
    }

    pub fn n_speed(&self) -> usize {
        self.speed_rpm.len()
    }

    pub fn n_torque(&self) -> usize {
        self.torque_nm.len()
    }

    pub fn speed_rpm(&self) -> &[f64] {
        &self.speed_rpm
    }

    pub fn torque(&self) -> &[f64] {
        &self.torque_nm
    }

    pub fn limits(&self) -> Option<&MachineLimits> {
        self.limits.as_ref()
    }

    /// Speed of column `i` in rad/s.
    pub fn omega(&self, i: usize) -> f64 {
        rpm_to_rad_s(self.speed_rpm[i])
    }

    pub fn eta(&self, i: usize, j: usize) -> Option<f64> {
        self.eta[i * self.n_torque() + j]
    }

    fn column(&self, i: usize) -> impl Iterator<Item = Option<f64>> + '_ {
        let nt = self.n_torque();
        self.eta[i * nt..(i + 1) * nt].iter().copied()
    }

    /// Highest-efficiency torque index in column `i` (lowest torque on ties).
    pub fn column_argmax(&self, i: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (j, e) in self.column(i).enumerate() {
            if let Some(e) = e {
                if best.is_none_or(|(_, b)| e > b) {
                    best = Some((j, e));
                }
            }
        }
        best
    }

    /// Column maximum that has a valid cell above it, i.e. one not pinned
    /// to the torque envelope or the top of the grid.
    pub fn interior_column_argmax(&self, i: usize) -> Option<(usize, f64)> {
        let (j, e) = self.column_argmax(i)?;
        (j + 1 < self.n_torque() && self.eta(i, j + 1).is_some()).then_some((j, e))
    }

    /// Global efficiency maximum `(speed index, torque index, eta)`.
    pub fn argmax(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.n_speed() {
            if let Some((j, e)) = self.column_argmax(i) {
                if best.is_none_or(|(_, _, b)| e > b) {
                    best = Some((i, j, e));
                }
            }
        }
        best
    }

    /// Efficiency in column `i` at torque `tau`, linear between the two
    /// bracketing grid cells. `None` if `tau` is off-grid or a bracketing
    /// cell is masked.
    pub fn interpolate(&self, i: usize, tau: f64) -> Option<f64> {
        let t = &self.torque_nm;
        if !(tau >= t[0] && tau <= t[t.len() - 1]) {
            return None;
        }
        let hi = t.partition_point(|&x| x < tau);
        if t[hi] == tau {
            return self.eta(i, hi);
        }
        let lo = hi - 1;
        let (e0, e1) = (self.eta(i, lo)?, self.eta(i, hi)?);
        let w = (tau - t[lo]) / (t[hi] - t[lo]);
        Some(e0 + w * (e1 - e0))
    }

    /// Long-format CSV: `omega_rpm,tau_nm,eta`, one row per valid cell.
    /// Limits, when present, go into a `# limits ...` comment line.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        if let Some(l) = &self.limits {
            let _ = writeln!(
                out,
                "# limits tau_cont_nm={} tau_peak_nm={} omega_rated_rad_s={} omega_max_rad_s={} p_cont_w={} p_peak_w={}",
                l.tau_cont_max, l.tau_peak_max, l.omega_rated, l.omega_max, l.p_cont_max, l.p_peak_max
            );
        }
        out.push_str("omega_rpm,tau_nm,eta\n");
        for i in 0..self.n_speed() {
            for j in 0..self.n_torque() {
                if let Some(e) = self.eta(i, j) {
                    let _ = writeln!(out, "{},{},{}", self.speed_rpm[i], self.torque_nm[j], e);
                }
            }
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut limits = None;
        for line in text.lines() {
            if let Some(rest) = line.trim().strip_prefix("# limits") {
                limits = Some(parse_limits(rest)?);
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::parse("efficiency map", format!("missing column `{name}`")))
        };
        let cols = [col("omega_rpm")?, col("tau_nm")?, col("eta")?];
        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let mut vals = [0.0; 3];
            for (v, &c) in vals.iter_mut().zip(&cols) {
                *v = rec
                    .get(c)
                    .and_then(|s| s.parse::<f64>().ok())
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::parse("efficiency map", format!("bad number on data row {}", n + 1)))?;
            }
            rows.push(vals);
        }
        let axis = |k: usize| {
            let mut v: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let (speeds, torques) = (axis(0), axis(1));
        let nt = torques.len();
        let mut eta = vec![None; speeds.len() * nt];
        for r in &rows {
            let i = speeds.binary_search_by(|x| x.total_cmp(&r[0])).expect("speed on axis");
            let j = torques.binary_search_by(|x| x.total_cmp(&r[1])).expect("torque on axis");
            if eta[i * nt + j].replace(r[2]).is_some() {
                return Err(Error::parse(
                    "efficiency map",
                    format!("duplicate cell at {} rpm, {} Nm", r[0], r[1]),
                ));
            }
        }
        Self::new(speeds, torques, eta, limits)
    }
}

fn parse_limits(s: &str) -> Result<MachineLimits> {
    let mut vals = [f64::NAN; 6];
    const KEYS: [&str; 6] = [
        "tau_cont_nm",
        "tau_peak_nm",
        "omega_rated_rad_s",
        "omega_max_rad_s",
        "p_cont_w",
        "p_peak_w",
    ];
    for kv in s.split_whitespace() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::parse("map limits", format!("expected key=value, got `{kv}`")))?;
        let idx = KEYS
            .iter()
            .position(|x| *x == k)
            .ok_or_else(|| Error::parse("map limits", format!("unknown key `{k}`")))?;
        vals[idx] = v
            .parse()
            .map_err(|_| Error::parse("map limits", format!("bad value for `{k}`")))?;
    }
    MachineLimits::new(vals[0], vals[1], vals[2], vals[3], vals[4], vals[5])
}

pub fn load_map(path: impl AsRef<Path>) -> Result<EfficiencyMap> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EfficiencyMap::parse_csv(&text)
}

pub fn save_map(path: impl AsRef<Path>, map: &EfficiencyMap) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, map.to_csv_string()).map_err(|e| Error::io(path, e))
}

/// Grid axes for map reconstruction (rpm and Nm, both ascending).
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub speeds_rpm: Vec<f64>,
    pub torques_nm: Vec<f64>,
}

impl GridSpec {
    /// Inclusive uniform axes starting at zero.
    pub fn uniform(speed_max_rpm: f64, speed_step_rpm: f64, torque_max_nm: f64, torque_step_nm: f64) -> Result<Self> {
        Ok(Self {
            speeds_rpm: uniform_axis(speed_max_rpm, speed_step_rpm, "speed_step_rpm")?,
            torques_nm: uniform_axis(torque_max_nm, torque_step_nm, "torque_step_nm")?,
        })
    }
}

fn uniform_axis(max: f64, step: f64, name: &'static str) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max >= 0.0) || !max.is_finite() {
        return Err(Error::param(name, format!("need step > 0 and max >= 0 (step {step}, max {max})")));
    }
    let n = (max / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * step).collect())
}

/// Analytical efficiency map of `c` on `grid`, masked by the peak envelope.
/// Cells with zero mechanical power get efficiency 0.
pub fn reconstruct_map(c: &LossCoefficients, limits: &MachineLimits, grid: &GridSpec) -> Result<EfficiencyMap> {
    if grid.speeds_rpm.is_empty() || grid.torques_nm.is_empty() {
        return Err(Error::EmptyInput("reconstruction grid is empty"));
    }
    let w_last = rpm_to_rad_s(*grid.speeds_rpm.last().expect("non-empty"));
    if w_last > limits.omega_max * (1.0 + 1e-12) || grid.speeds_rpm[0] < 0.0 {
        return Err(Error::param("grid", "speeds must lie within [0, omega_max]"));
    }
    let t_last = *grid.torques_nm.last().expect("non-empty");
    if t_last > limits.tau_peak_max * (1.0 + 1e-12) || grid.torques_nm[0] < 0.0 {
        return Err(Error::param("grid", "torques must lie within [0, peak torque]"));
    }
    let mut eta = Vec::with_capacity(grid.speeds_rpm.len() * grid.torques_nm.len());
    for &rpm in &grid.speeds_rpm {
        let omega = rpm_to_rad_s(rpm);
        let cap = limits.peak_torque(omega) * (1.0 + 1e-12);
        for &tau in &grid.torques_nm {
            eta.push(if tau > cap {
                None
            } else if tau * omega == 0.0 {
                Some(0.0)
            } else {
                Some(efficiency(c, MachinePoint { tau, omega })?)
            });
        }
    }
    EfficiencyMap::new(grid.speeds_rpm.clone(), grid.torques_nm.clone(), eta, Some(*limits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn i3_map() -> EfficiencyMap {
        let grid = GridSpec::uniform(11400.0, 200.0, 250.0, 5.0).unwrap();
        reconstruct_map(&presets::i3_loss_coefficients(), &presets::i3_machine_limits(), &grid).unwrap()
    }

    #[test]
    fn reconstructed_cell_at_design_point_three() {
        let grid = GridSpec {
            speeds_rpm: vec![0.0, 4886.0],
            torques_nm: vec![0.0, 78.7, 200.0],
        };
        let m = reconstruct_map(&presets::i3_loss_coefficients(), &presets::i3_machine_limits(), &grid).unwrap();
        assert!((m.eta(1, 1).unwrap() - 0.970).abs() < 1e-3);
        assert_eq!(m.eta(0, 1), Some(0.0));
        assert_eq!(m.eta(1, 0), Some(0.0));
    }

    #[test]
    fn envelope_masks_high_torque_at_speed() {
        let m = i3_map();
        let i = m.speed_rpm().iter().position(|&s| s == 11400.0).unwrap();
        let j = m.torque().iter().position(|&t| t == 150.0).unwrap();
        assert_eq!(m.eta(i, j), None);
        assert!(m.eta(0, m.n_torque() - 1).is_some());
    }

    #[test]
    fn argmax_sits_at_high_power_corner() {
        // The two-degree OOL efficiency rises monotonically with speed, so the
        // grid maximum is where the OOL meets the peak-power envelope, not at
        // the tabulated 4886 rpm point.
        let m = i3_map();
        let (i, j, e) = m.argmax().unwrap();
        assert!(m.speed_rpm()[i] > 9000.0, "{}", m.speed_rpm()[i]);
        assert!(m.torque()[j] > 90.0 && m.torque()[j] < 130.0);
        assert!(e > 0.974 && e < 0.976);
    }

    #[test]
    fn empty_grid_rejected() {
        let grid = GridSpec {
            speeds_rpm: vec![],
            torques_nm: vec![1.0],
        };
        assert!(reconstruct_map(&presets::i3_loss_coefficients(), &presets::i3_machine_limits(), &grid).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let m = i3_map();
        let back = EfficiencyMap::parse_csv(&m.to_csv_string()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn single_cell_map() {
        let m = EfficiencyMap::parse_csv("omega_rpm,tau_nm,eta\n1000,10,0.9\n").unwrap();
        assert_eq!((m.n_speed(), m.n_torque()), (1, 1));
        assert_eq!(m.eta(0, 0), Some(0.9));
    }

    #[test]
    fn parse_errors() {
        assert!(EfficiencyMap::parse_csv("omega_rpm,eta\n1000,0.9\n").is_err());
        assert!(EfficiencyMap::parse_csv("omega_rpm,tau_nm,eta\n1000,10,1.5\n").is_err());
        assert!(EfficiencyMap::parse_csv("omega_rpm,tau_nm,eta\n1000,10,0.5\n1000,10,0.6\n").is_err());
        assert!(EfficiencyMap::parse_csv("omega_rpm,tau_nm,eta\n1000,x,0.5\n").is_err());
        assert!(EfficiencyMap::new(vec![2.0, 1.0], vec![1.0], vec![None, None], None).is_err());
    }

    #[test]
    fn interpolation_between_cells() {
        let m = EfficiencyMap::new(
            vec![1000.0],
            vec![10.0, 20.0, 30.0],
            vec![Some(0.8), Some(0.9), None],
            None,
        )
        .unwrap();
        assert!((m.interpolate(0, 15.0).unwrap() - 0.85).abs() < 1e-12);
        assert_eq!(m.interpolate(0, 20.0), Some(0.9));
        assert_eq!(m.interpolate(0, 25.0), None);
        assert_eq!(m.interpolate(0, 5.0), None);
    }
}
