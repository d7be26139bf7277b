use std::collections::{BTreeMap, BTreeSet};

use super::{NodeAddress, TrustError, TrustTable};

/// Result of one re-election round.
#[derive(Clone, Debug, PartialEq)]
pub struct ElectionOutcome {
    pub head: NodeAddress,
    pub vice: Option<NodeAddress>,
    /// Votes received per candidate (only candidates with at least one vote).
    pub votes: BTreeMap<NodeAddress, u32>,
    /// `(voter, choice)` for every member that cast a vote.
    pub ballots: Vec<(NodeAddress, NodeAddress)>,
}

/// The vote a member casts: its group neighbor with the highest effective
/// trust, lowest address on ties. Members never vote for themselves, and a
/// neighbor with zero effective trust (e.g. flagged suspicious) gets no vote.
pub fn cast_vote(voter: NodeAddress, group: &BTreeSet<NodeAddress>, table: &TrustTable) -> Option<NodeAddress> {
    let mut best: Option<(NodeAddress, f64)> = None;
    for &candidate in group {
        if candidate == voter {
            continue;
        }
        let Some(t) = table.effective_trust(candidate) else {
            continue;
        };
        if t <= 0.0 {
            continue;
        }
        // Ascending iteration: strict > keeps the lowest address on ties.
        if best.is_none_or(|(_, bt)| t > bt) {
            best = Some((candidate, t));
        }
    }
    best.map(|(c, _)| c)
}

/// Runs one round of trust-based group head election.
///
/// The current head has announced the re-election; every member (the head
/// included) votes for its most trusted neighbor, and the head hands the
/// role to the most-voted node. The runner-up, when it has any votes,
/// becomes vice head. Ties go to the lowest address. When nobody votes the
/// current head keeps the role.
pub fn run_election(
    group: &BTreeSet<NodeAddress>,
    tables: &BTreeMap<NodeAddress, TrustTable>,
    current_head: NodeAddress,
) -> Result<ElectionOutcome, TrustError> {
    if group.is_empty() {
        return Err(TrustError::EmptyGroup);
    }
    if !group.contains(&current_head) {
        return Err(TrustError::HeadNotInGroup(current_head));
    }
    if group.len() == 1 {
        return Ok(ElectionOutcome {
            head: current_head,
            vice: None,
            votes: BTreeMap::new(),
            ballots: Vec::new(),
        });
    }

    let mut ballots = Vec::new();
    for &voter in group {
        let Some(table) = tables.get(&voter) else {
            continue;
        };
        if let Some(choice) = cast_vote(voter, group, table) {
            ballots.push((voter, choice));
        }
    }
    Ok(tally_votes(ballots, current_head))
}

/// Counts `(voter, choice)` ballots: most votes wins, ties to the lowest
/// address, runner-up with any votes is vice. No ballots keeps `current_head`.
pub fn tally_votes(ballots: Vec<(NodeAddress, NodeAddress)>, current_head: NodeAddress) -> ElectionOutcome {
    let mut votes: BTreeMap<NodeAddress, u32> = BTreeMap::new();
    for (_, choice) in &ballots {
        *votes.entry(*choice).or_default() += 1;
    }
    let mut ranked: Vec<(NodeAddress, u32)> = votes.iter().map(|(a, v)| (*a, *v)).collect();
    ranked.sort_by(|(a, va), (b, vb)| vb.cmp(va).then(a.cmp(b)));

    let head = ranked.first().map_or(current_head, |(a, _)| *a);
    let vice = ranked.iter().find(|(a, _)| *a != head).map(|(a, _)| *a);
    ElectionOutcome {
        head,
        vice,
        votes,
        ballots,
    }
}
