//! Header-list comparison: decide which remote messages to request.

use std::collections::BTreeMap;

use mocha_core::{MsgHeader, RobotId, Stamp, TeamConfig, TopicKey};

/// Compare the local header list against a remote one and return the headers
/// worth requesting.
///
/// A remote header is selected when its key is absent locally or when it is
/// strictly newer than the local one — newness is only ever judged between
/// headers of the same robot, so no cross-robot clock comparison decides
/// inclusion. The client's own topics are never requested; its local data is
/// authoritative. Keys outside the shared configuration are ignored.
///
/// Request order: priority descending, then stamp descending, then
/// `(rid, tid)` ascending as the deterministic tie-break.
pub fn diff_headers(
    local: &[MsgHeader],
    remote: &[MsgHeader],
    cfg: &TeamConfig,
    self_rid: RobotId,
) -> Vec<MsgHeader> {
    let local_stamps: BTreeMap<TopicKey, Stamp> =
        local.iter().map(|h| (h.key(), h.stamp)).collect();

    let mut wanted: Vec<MsgHeader> = remote
        .iter()
        .filter(|h| h.rid != self_rid)
        .filter(|h| cfg.contains_key(h.key()))
        .filter(|h| match local_stamps.get(&h.key()) {
            None => true,
            Some(local_stamp) => h.stamp > *local_stamp,
        })
        .copied()
        .collect();

    let priority_of =
        |h: &MsgHeader| cfg.topic(h.key()).map(|t| t.priority).unwrap_or_default();
    wanted.sort_by(|a, b| {
        priority_of(b)
            .cmp(&priority_of(a))
            .then_with(|| b.stamp.cmp(&a.stamp))
            .then_with(|| a.key().cmp(&b.key()))
    });
    wanted
}

#[cfg(test)]
mod tests {
    use super::*;
    use mocha_core::{RobotSpec, TopicId, TopicSpec};

    fn cfg() -> TeamConfig {
        let topic = |name: &str, priority: u8| TopicSpec {
            name: name.into(),
            priority,
            rate_hz: 10.0,
            hint_bytes: 0,
        };
        TeamConfig {
            robots: vec![
                RobotSpec {
                    name: "self".into(),
                    topics: vec![topic("pose", 2)],
                },
                RobotSpec {
                    name: "peer-a".into(),
                    topics: vec![topic("hi", 9), topic("lo", 1)],
                },
                RobotSpec {
                    name: "peer-b".into(),
                    topics: vec![topic("hi", 9)],
                },
            ],
        }
    }

    fn header(rid: u8, tid: u8, s: u16, ms: u16) -> MsgHeader {
        MsgHeader::new(RobotId(rid), TopicId(tid), Stamp::new(s, ms).unwrap())
    }

    #[test]
    fn newer_remote_is_requested() {
        let local = [header(1, 0, 100, 500)];
        let remote = [header(1, 0, 100, 600)];
        assert_eq!(diff_headers(&local, &remote, &cfg(), RobotId(0)), vec![remote[0]]);
    }

    #[test]
    fn equal_lists_are_a_fixed_point() {
        let list = [header(1, 0, 100, 500), header(2, 0, 3, 0)];
        assert!(diff_headers(&list, &list, &cfg(), RobotId(0)).is_empty());
        assert!(diff_headers(&[], &[], &cfg(), RobotId(0)).is_empty());
    }

    #[test]
    fn older_or_equal_remote_is_skipped() {
        let local = [header(1, 0, 100, 500)];
        assert!(diff_headers(&local, &[header(1, 0, 100, 500)], &cfg(), RobotId(0)).is_empty());
        assert!(diff_headers(&local, &[header(1, 0, 99, 900)], &cfg(), RobotId(0)).is_empty());
    }

    #[test]
    fn own_topics_are_never_requested() {
        let remote = [header(0, 0, 50, 0), header(1, 0, 50, 0)];
        let got = diff_headers(&[], &remote, &cfg(), RobotId(0));
        assert_eq!(got, vec![remote[1]]);
    }

    #[test]
    fn keys_outside_config_are_ignored() {
        let remote = [header(7, 0, 1, 0), header(1, 5, 1, 0)];
        assert!(diff_headers(&[], &remote, &cfg(), RobotId(0)).is_empty());
    }

    #[test]
    fn order_is_priority_then_stamp_then_key_for_all_permutations() {
        // Three novel keys: two high priority at 20 s and 10 s, one low.
        let hi_20 = header(2, 0, 20, 0);
        let hi_10 = header(1, 0, 10, 0);
        let lo = header(1, 1, 30, 0);
        let expected = vec![hi_20, hi_10, lo];

        // Oracle: the result must be identical for every input permutation.
        let items = [hi_20, hi_10, lo];
        let permutations: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for p in permutations {
            let remote: Vec<MsgHeader> = p.iter().map(|&i| items[i]).collect();
            assert_eq!(diff_headers(&[], &remote, &cfg(), RobotId(0)), expected);
        }
    }

    #[test]
    fn equal_priority_and_stamp_breaks_ties_by_key() {
        let a = header(1, 0, 10, 0);
        let b = header(2, 0, 10, 0);
        let got = diff_headers(&[], &[b, a], &cfg(), RobotId(0));
        assert_eq!(got, vec![a, b]);
    }
}
