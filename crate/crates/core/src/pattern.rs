//! Difference-pattern experiments and field dumps (CSV / PGM).

use serde::{Deserialize, Serialize};

use crate::automaton::{Automaton, AutomatonState};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

/// How far the difference reaches along one signed axis direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionExtent {
    pub axis: usize,
    /// `+1` or `-1`.
    pub sign: i8,
    pub extent: usize,
}

/// Support of the difference between an original and a perturbed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffPatternReport {
    pub extents: Vec<usize>,
    pub modulus: u32,
    pub perturb_site: Vec<usize>,
    pub perturb_delta: i64,
    pub epochs: u64,
    /// Coordinates where the two runs differ after `epochs` epochs.
    pub changed_cells: Vec<Vec<usize>>,
    /// Largest periodic L1 distance of a changed cell from the perturbation.
    pub support_radius: usize,
    /// Support radius after every single time step (two per epoch).
    pub radius_history: Vec<usize>,
    pub direction_extents: Vec<DirectionExtent>,
    /// Largest over smallest direction extent; `None` when some direction has
    /// zero reach while another does not.
    pub anisotropy_ratio: Option<f64>,
    /// Light-cone bound in single steps (`2 * epochs`).
    pub light_cone_bound: u64,
    pub within_light_cone: bool,
}

/// Report plus the final fields of both runs.
#[derive(Debug, Clone)]
pub struct DifferenceRun {
    pub report: DiffPatternReport,
    pub original: AutomatonState,
    pub perturbed: AutomatonState,
}

impl DifferenceRun {
    /// `(perturbed − original) mod N` per cell, by linear index.
    pub fn difference_field(&self) -> Vec<u32> {
        let n = self.original.spec.modulus();
        self.perturbed
            .cells()
            .iter()
            .zip(self.original.cells())
            .map(|(&p, o)| (p + n - o) % n)
            .collect()
    }
}

fn support_radius(spec: &LatticeSpec, a: &AutomatonState, b: &AutomatonState, origin: usize) -> usize {
    a.cells()
        .iter()
        .zip(b.cells())
        .enumerate()
        .filter(|(_, (x, y))| *x != y)
        .map(|(i, _)| spec.distance(origin, i))
        .max()
        .unwrap_or(0)
}

/// Runs the original and the perturbed evolutions side by side and reports
/// where they differ.
pub fn difference_pattern(
    automaton: &Automaton,
    seed_state: &AutomatonState,
    perturb_site: &[i64],
    perturb_delta: i64,
    epochs: u64,
) -> Result<DifferenceRun> {
    let spec = automaton.spec();
    let n = spec.modulus();
    let site = spec.checked_index(perturb_site)?;
    let delta = perturb_delta.rem_euclid(n as i64) as u32;
    if delta == 0 {
        return Err(Error::DegeneratePerturbation {
            delta: perturb_delta,
            modulus: n,
        });
    }

    let mut cells = seed_state.cells();
    cells[site] = (cells[site] + delta) % n;
    let mut perturbed = AutomatonState::from_cells(spec, &cells)?;
    perturbed.epoch = seed_state.epoch;
    let mut original = seed_state.clone();

    let mut radius_history = Vec::with_capacity(2 * epochs as usize);
    for _ in 0..epochs {
        original = automaton.half_step_odd(&original);
        perturbed = automaton.half_step_odd(&perturbed);
        radius_history.push(support_radius(spec, &original, &perturbed, site));
        original = automaton.half_step_even(&original);
        perturbed = automaton.half_step_even(&perturbed);
        original.epoch += 1;
        perturbed.epoch += 1;
        radius_history.push(support_radius(spec, &original, &perturbed, site));
    }

    let orig_cells = original.cells();
    let pert_cells = perturbed.cells();
    let changed: Vec<usize> = (0..spec.cell_count())
        .filter(|&i| orig_cells[i] != pert_cells[i])
        .collect();

    let support_radius = changed.iter().map(|&i| spec.distance(site, i)).max().unwrap_or(0);
    let mut direction_extents = Vec::with_capacity(2 * spec.dims());
    for axis in 0..spec.dims() {
        for sign in [-1i8, 1] {
            let extent = changed
                .iter()
                .map(|&i| (spec.displacement(site, i)[axis] * sign as i64).max(0) as usize)
                .max()
                .unwrap_or(0);
            direction_extents.push(DirectionExtent { axis, sign, extent });
        }
    }
    let max_ext = direction_extents.iter().map(|d| d.extent).max().unwrap_or(0);
    let min_ext = direction_extents.iter().map(|d| d.extent).min().unwrap_or(0);
    let anisotropy_ratio = match (max_ext, min_ext) {
        (0, _) => Some(1.0),
        (_, 0) => None,
        (hi, lo) => Some(hi as f64 / lo as f64),
    };

    let bound = 2 * epochs;
    let within = radius_history
        .iter()
        .enumerate()
        .all(|(step, &r)| r as u64 <= step as u64 + 1);

    let report = DiffPatternReport {
        extents: spec.extents().to_vec(),
        modulus: n,
        perturb_site: spec.coord_of(site),
        perturb_delta,
        epochs,
        changed_cells: changed.iter().map(|&i| spec.coord_of(i)).collect(),
        support_radius,
        radius_history,
        direction_extents,
        anisotropy_ratio,
        light_cone_bound: bound,
        within_light_cone: within && support_radius as u64 <= bound,
    };
    Ok(DifferenceRun {
        report,
        original,
        perturbed,
    })
}

/// CSV dump of a field: one `x,y,...,value` row per cell.
pub fn field_csv(spec: &LatticeSpec, cells: &[u32]) -> String {
    let names = ["x", "y", "z"];
    let mut header: Vec<String> = (0..spec.dims())
        .map(|a| {
            if spec.dims() <= 3 {
                names[a].to_string()
            } else {
                format!("x{a}")
            }
        })
        .collect();
    header.push("value".into());
    let mut out = header.join(",");
    out.push('\n');
    for (i, v) in cells.iter().enumerate() {
        for c in spec.coord_of(i) {
            out.push_str(&c.to_string());
            out.push(',');
        }
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

/// Binary PGM (P5, maxval 255). The last axis runs along image rows; all
/// other axes are stacked vertically. Values are scaled by `255 / (N − 1)`.
pub fn field_pgm(spec: &LatticeSpec, cells: &[u32]) -> Vec<u8> {
    let width = *spec.extents().last().expect("lattice has a dimension");
    let height = spec.cell_count() / width;
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    let scale = 255.0 / (spec.modulus() - 1) as f64;
    out.extend(cells.iter().map(|&v| (v as f64 * scale).round().min(255.0) as u8));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::RuleSpec;

    #[test]
    fn zero_rule_does_not_propagate() {
        let spec = LatticeSpec::new(vec![8, 8], 5).unwrap();
        let a = Automaton::new(&spec, &RuleSpec::zero(&spec).unwrap()).unwrap();
        let s = AutomatonState::random(&spec, 1);
        let run = difference_pattern(&a, &s, &[3, 3], 2, 5).unwrap();
        assert_eq!(run.report.changed_cells, vec![vec![3, 3]]);
        assert_eq!(run.report.support_radius, 0);
        assert_eq!(run.report.anisotropy_ratio, Some(1.0));
        assert!(run.report.within_light_cone);
    }

    #[test]
    fn zero_delta_is_rejected() {
        let spec = LatticeSpec::ring(8, 3).unwrap();
        let a = Automaton::new(&spec, &RuleSpec::LinearSum).unwrap();
        let s = AutomatonState::zeros(&spec);
        assert!(matches!(
            difference_pattern(&a, &s, &[0], 3, 1),
            Err(Error::DegeneratePerturbation { .. })
        ));
        assert!(matches!(
            difference_pattern(&a, &s, &[9], 1, 1),
            Err(Error::InvalidSite { .. })
        ));
    }

    #[test]
    fn odd_site_perturbation_lags_the_cone() {
        let spec = LatticeSpec::ring(32, 2).unwrap();
        let a = Automaton::new(&spec, &RuleSpec::LinearSum).unwrap();
        let s = AutomatonState::zeros(&spec);
        let run = difference_pattern(&a, &s, &[15], 1, 3).unwrap();
        assert!(run.report.within_light_cone);
        assert!(run.report.support_radius < 6);
    }

    #[test]
    fn difference_field_marks_changes() {
        let spec = LatticeSpec::ring(8, 5).unwrap();
        let a = Automaton::new(&spec, &RuleSpec::zero(&spec).unwrap()).unwrap();
        let run = difference_pattern(&a, &AutomatonState::zeros(&spec), &[2], -1, 1).unwrap();
        assert_eq!(run.difference_field(), vec![0, 0, 4, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn csv_and_pgm_layout() {
        let spec = LatticeSpec::new(vec![2, 4], 3).unwrap();
        let cells = vec![0, 1, 2, 0, 1, 1, 2, 2];
        let csv = field_csv(&spec, &cells);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,y,value"));
        assert_eq!(lines.next(), Some("0,0,0"));
        assert_eq!(lines.nth(5), Some("1,2,2"));
        let pgm = field_pgm(&spec, &cells);
        let header = b"P5\n4 2\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        assert_eq!(&pgm[header.len()..], &[0, 128, 255, 0, 128, 128, 255, 255]);
    }
}
