use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::geometry::PhasePoint;

use super::{bracket_from_gradients, independence_rank_report, IntegralSet, RankReport};

#[derive(Debug, Clone, PartialEq)]
pub struct MemberResidual {
    pub name: String,
    /// Max of `|{H, member}|` over the sample.
    pub max_abs: f64,
    pub mean_abs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub system: String,
    pub chart: String,
    pub points: usize,
    pub tolerance: f64,
    pub members: Vec<MemberResidual>,
    pub candidates: Vec<MemberResidual>,
    /// Max `|{m_i, m_j}|` over the sample, informational.
    pub pairwise: Vec<Vec<f64>>,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.members.iter().map(|m| m.max_abs).fold(0.0, f64::max)
    }

    pub fn all_pass(&self) -> bool {
        self.members.iter().all(|m| m.pass)
    }
}

struct PointBrackets {
    members: Vec<f64>,
    candidates: Vec<f64>,
    pairwise: Vec<Vec<f64>>,
}

/// Brackets of every member and candidate with the Hamiltonian over `points`,
/// plus the pairwise member matrix.
pub fn bracket_residual(set: &IntegralSet, points: &[PhasePoint]) -> Result<ResidualReport> {
    if points.is_empty() {
        return Err(LabError::Empty("no points for the bracket residual".into()));
    }
    let per_point = points
        .par_iter()
        .map(|pt| {
            let gh = set.hamiltonian.flat_gradient(pt)?;
            let gm = set
                .members
                .iter()
                .map(|m| m.flat_gradient(pt))
                .collect::<Result<Vec<_>>>()?;
            let gc = set
                .candidates
                .iter()
                .map(|m| m.flat_gradient(pt))
                .collect::<Result<Vec<_>>>()?;
            Ok(PointBrackets {
                members: gm.iter().map(|g| bracket_from_gradients(&gh, g)).collect(),
                candidates: gc.iter().map(|g| bracket_from_gradients(&gh, g)).collect(),
                pairwise: gm
                    .iter()
                    .map(|a| gm.iter().map(|b| bracket_from_gradients(a, b)).collect())
                    .collect(),
            })
        })
        .collect::<Result<Vec<PointBrackets>>>()?;

    let tolerance = set.bracket_tolerance();
    let n = points.len() as f64;
    let summarize = |name: &str, idx: usize, pick: &dyn Fn(&PointBrackets) -> &Vec<f64>| {
        let vals: Vec<f64> = per_point.iter().map(|b| pick(b)[idx].abs()).collect();
        let max_abs = vals.iter().copied().fold(0.0, f64::max);
        MemberResidual {
            name: name.to_string(),
            max_abs,
            mean_abs: vals.iter().sum::<f64>() / n,
            pass: max_abs < tolerance,
        }
    };
    let members = set
        .members
        .iter()
        .enumerate()
        .map(|(i, m)| summarize(m.name(), i, &|b| &b.members))
        .collect();
    let candidates = set
        .candidates
        .iter()
        .enumerate()
        .map(|(i, m)| summarize(m.name(), i, &|b| &b.candidates))
        .collect();
    let k = set.members.len();
    let pairwise = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| per_point.iter().map(|b| b.pairwise[i][j].abs()).fold(0.0, f64::max))
                .collect()
        })
        .collect();

    Ok(ResidualReport {
        system: set.system.clone(),
        chart: set.chart().to_string(),
        points: points.len(),
        tolerance,
        members,
        candidates,
        pairwise,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateVerdict {
    pub name: String,
    pub max_abs: f64,
    pub verified: bool,
}

/// Bracket test of the set's candidate integrals.
pub fn screen_candidates(set: &IntegralSet, points: &[PhasePoint]) -> Result<Vec<CandidateVerdict>> {
    let report = bracket_residual(set, points)?;
    Ok(report
        .candidates
        .into_iter()
        .map(|c| CandidateVerdict {
            name: c.name,
            max_abs: c.max_abs,
            verified: c.pass,
        })
        .collect())
}

/// Moves verified candidates into the member list and sets the claimed
/// count to the gradient rank of the certified family.
pub fn certify_candidates(
    set: &IntegralSet,
    points: &[PhasePoint],
) -> Result<(IntegralSet, Vec<CandidateVerdict>, RankReport)> {
    let verdicts = screen_candidates(set, points)?;
    let mut certified = set.clone();
    certified.candidates.clear();
    for (c, v) in set.candidates.iter().zip(&verdicts) {
        if v.verified {
            certified.members.push(c.clone());
        }
    }
    let rank = independence_rank_report(&certified.rank_family(), points)?;
    certified.claimed_independent = rank.rank;
    Ok((certified, verdicts, rank))
}
