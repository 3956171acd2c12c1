//! Partial word-line activation schedules.
//!
//! An MVM can be split into cycles that each assert only a subset of the
//! word lines. Consecutive grouping takes contiguous blocks of rows; the
//! distributed (strided) grouping interleaves rows so that each group gets
//! an even share of the rows that the remap pushed to the bottom.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "full")]
    Full,
    #[serde(rename = "pwa")]
    ConsecutivePwa,
    #[serde(rename = "dpwa")]
    StridedDpwa,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Full => "full",
            Strategy::ConsecutivePwa => "pwa",
            Strategy::StridedDpwa => "dpwa",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Strategy::Full),
            "pwa" => Ok(Strategy::ConsecutivePwa),
            "dpwa" => Ok(Strategy::StridedDpwa),
            other => Err(Error::invalid(format!("unknown schedule strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationSchedule {
    n_rows: usize,
    groups: Vec<Vec<usize>>,
    strategy: Strategy,
}

impl ActivationSchedule {
    pub fn full(n_rows: usize) -> Self {
        Self { n_rows, groups: vec![(0..n_rows).collect()], strategy: Strategy::Full }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Largest number of rows asserted in any one cycle.
    pub fn max_active_rows(&self) -> usize {
        self.groups.iter().map(Vec::len).max().unwrap_or(0)
    }
}

pub fn make_groups(n_rows: usize, n_groups: usize, strategy: Strategy) -> Result<ActivationSchedule> {
    if n_rows == 0 || n_groups == 0 {
        return Err(Error::invalid("rows and groups must be positive"));
    }
    if !n_rows.is_multiple_of(n_groups) {
        return Err(Error::invalid(format!("{n_groups} groups do not divide {n_rows} rows")));
    }
    let size = n_rows / n_groups;
    let groups = match strategy {
        Strategy::Full => {
            if n_groups != 1 {
                return Err(Error::invalid("full activation uses exactly one group"));
            }
            vec![(0..n_rows).collect()]
        }
        Strategy::ConsecutivePwa => (0..n_groups).map(|g| (g * size..(g + 1) * size).collect()).collect(),
        Strategy::StridedDpwa => (0..n_groups).map(|g| (g..n_rows).step_by(n_groups).collect()).collect(),
    };
    Ok(ActivationSchedule { n_rows, groups, strategy })
}

/// Inputs outside the group are forced to 0 (gate held low).
pub fn masked_inputs(x: &[bool], schedule: &ActivationSchedule, group_index: usize) -> Result<Vec<bool>> {
    if x.len() != schedule.n_rows {
        return Err(Error::DimensionMismatch(format!(
            "schedule covers {} rows, input has {}",
            schedule.n_rows,
            x.len()
        )));
    }
    let group = schedule
        .groups
        .get(group_index)
        .ok_or_else(|| Error::invalid(format!("group {group_index} out of range")))?;
    let mut out = vec![false; x.len()];
    for &r in group {
        out[r] = x[r];
    }
    Ok(out)
}

/// Element-wise sum of per-cycle column codes.
pub fn accumulate(cycle_outputs: &[Vec<i64>]) -> Result<Vec<i64>> {
    let cols = cycle_outputs.first().map_or(0, Vec::len);
    let mut total = vec![0i64; cols];
    for cycle in cycle_outputs {
        if cycle.len() != cols {
            return Err(Error::DimensionMismatch("cycles disagree on column count".into()));
        }
        for (t, v) in total.iter_mut().zip(cycle) {
            *t += v;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use super::Strategy;
    use proptest::strategy::Strategy as _;

    #[test]
    fn grouping_examples() {
        let pwa = make_groups(8, 2, Strategy::ConsecutivePwa).unwrap();
        assert_eq!(pwa.groups(), &[vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
        let dpwa = make_groups(8, 2, Strategy::StridedDpwa).unwrap();
        assert_eq!(dpwa.groups(), &[vec![0, 2, 4, 6], vec![1, 3, 5, 7]]);
        let half = make_groups(128, 2, Strategy::StridedDpwa).unwrap();
        assert!(half.groups().iter().all(|g| g.len() == 64));
        assert!(make_groups(10, 3, Strategy::ConsecutivePwa).is_err());
        assert!(make_groups(8, 2, Strategy::Full).is_err());
        assert_eq!(make_groups(8, 1, Strategy::Full).unwrap(), ActivationSchedule::full(8));
    }

    #[test]
    fn masking_examples() {
        let x = vec![true, false, true, true];
        assert_eq!(masked_inputs(&x, &ActivationSchedule::full(4), 0).unwrap(), x);
        let dpwa = make_groups(4, 2, Strategy::StridedDpwa).unwrap();
        assert_eq!(masked_inputs(&[true; 4], &dpwa, 0).unwrap(), vec![true, false, true, false]);
        assert!(masked_inputs(&x, &dpwa, 2).is_err());
    }

    #[test]
    fn accumulate_examples() {
        assert_eq!(accumulate(&[vec![1, 2, 3]]).unwrap(), vec![1, 2, 3]);
        assert_eq!(accumulate(&[vec![1, 2], vec![3, 4]]).unwrap(), vec![4, 6]);
        assert!(accumulate(&[vec![1], vec![1, 2]]).is_err());
    }

    fn schedules() -> impl proptest::strategy::Strategy<Value = ActivationSchedule> {
        (1usize..8, 1usize..17, 0u8..3).prop_map(|(g, size, s)| {
            let strategy = match s {
                0 => Strategy::Full,
                1 => Strategy::ConsecutivePwa,
                _ => Strategy::StridedDpwa,
            };
            let g = if strategy == Strategy::Full { 1 } else { g };
            make_groups(g * size, g, strategy).unwrap()
        })
    }

    proptest! {
        #[test]
        fn groups_partition_rows(s in schedules()) {
            let mut seen = vec![0; s.n_rows()];
            for g in s.groups() {
                for &r in g {
                    seen[r] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&n| n == 1));
        }

        #[test]
        fn union_of_masks_is_input(s in schedules(), seed in any::<u64>()) {
            let x: Vec<bool> = (0..s.n_rows()).map(|r| (seed >> (r % 64)) & 1 == 1).collect();
            let mut union = vec![false; x.len()];
            for g in 0..s.n_groups() {
                for (u, m) in union.iter_mut().zip(masked_inputs(&x, &s, g).unwrap()) {
                    prop_assert!(!(*u && m));
                    *u |= m;
                }
            }
            prop_assert_eq!(union, x);
        }

        #[test]
        fn strided_groups_balance_sorted_rows(
            mut sums in proptest::collection::vec(0usize..200, 64),
            g in prop::sample::select(vec![2usize, 4, 8, 16]),
        ) {
            sums.sort();
            let max = *sums.last().unwrap();
            let totals = |s: &ActivationSchedule| -> Vec<usize> {
                s.groups().iter().map(|grp| grp.iter().map(|&r| sums[r]).sum()).collect()
            };
            let strided = totals(&make_groups(64, g, Strategy::StridedDpwa).unwrap());
            let spread = strided.iter().max().unwrap() - strided.iter().min().unwrap();
            prop_assert!(spread <= max);
            let consecutive = totals(&make_groups(64, g, Strategy::ConsecutivePwa).unwrap());
            let spread_c = consecutive.iter().max().unwrap() - consecutive.iter().min().unwrap();
            prop_assert!(spread <= spread_c);
        }
    }
}
