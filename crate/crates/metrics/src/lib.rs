//! Communication metrics shared by the daemon and the simulator.
//!
//! Per peer: time of last completed synchronization, smoothed round-trip
//! time, sliding-window bandwidth, exchange status (idle / comm start /
//! comm end / timeout), and an optional physical-layer signal reading. These
//! feed both operator reports and communication-aware planning.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Mutex;

use mocha_core::RobotId;
use serde::Serialize;
use thiserror::Error;

/// RTT smoothing factor; the first sample initializes the estimate directly.
pub const RTT_SMOOTHING: f64 = 0.125;

/// Sliding window over which live bandwidth is averaged, seconds.
pub const BANDWIDTH_WINDOW_S: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkStatus {
    Idle,
    CommStart,
    CommEnd,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionEvent {
    CommStart,
    CommEnd,
    Timeout,
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("event at {at} s precedes the previous event at {previous} s for this peer")]
pub struct OutOfOrder {
    pub at: f64,
    pub previous: f64,
}

#[derive(Debug, Clone)]
struct PeerState {
    status: LinkStatus,
    last_event_at: Option<f64>,
    last_sync_time: Option<f64>,
    rtt: Option<f64>,
    traffic: VecDeque<(f64, u64)>,
    phy: Option<f64>,
}

impl PeerState {
    fn new() -> Self {
        Self {
            status: LinkStatus::Idle,
            last_event_at: None,
            last_sync_time: None,
            rtt: None,
            traffic: VecDeque::new(),
            phy: None,
        }
    }
}

/// Snapshot of one peer's metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeerMetrics {
    pub rid: RobotId,
    pub status: LinkStatus,
    pub last_sync_time: Option<f64>,
    pub rtt: Option<f64>,
    /// Bytes per second over the sliding window, as of the last observation.
    pub bandwidth: f64,
    pub phy: Option<f64>,
}

/// Thread-safe metrics registry; updates are atomic per call.
pub struct MetricsHub {
    peers: Mutex<BTreeMap<RobotId, PeerState>>,
}

impl Default for MetricsHub {
    fn default() -> Self {
        Self::new()
    }
}

impl MetricsHub {
    pub fn new() -> Self {
        Self {
            peers: Mutex::new(BTreeMap::new()),
        }
    }

    /// Record a session status event. Events must arrive time-ordered per
    /// peer. A completed exchange (CommEnd) updates the last sync time.
    pub fn record_session_event(
        &self,
        peer: RobotId,
        event: SessionEvent,
        t: f64,
    ) -> Result<(), OutOfOrder> {
        let mut peers = self.peers.lock().unwrap();
        let state = peers.entry(peer).or_insert_with(PeerState::new);
        if let Some(previous) = state.last_event_at {
            if t < previous {
                return Err(OutOfOrder { at: t, previous });
            }
        }
        state.last_event_at = Some(t);
        state.status = match event {
            SessionEvent::CommStart => LinkStatus::CommStart,
            SessionEvent::CommEnd => {
                state.last_sync_time = Some(t);
                LinkStatus::CommEnd
            }
            SessionEvent::Timeout => LinkStatus::Timeout,
        };
        Ok(())
    }

    /// Feed one measured round-trip time. The first sample seeds the
    /// estimate; later samples are folded in exponentially.
    pub fn observe_rtt(&self, peer: RobotId, sample_s: f64) {
        let mut peers = self.peers.lock().unwrap();
        let state = peers.entry(peer).or_insert_with(PeerState::new);
        state.rtt = Some(match state.rtt {
            None => sample_s,
            Some(current) => (1.0 - RTT_SMOOTHING) * current + RTT_SMOOTHING * sample_s,
        });
    }

    /// Count `bytes` of traffic exchanged with `peer` at time `t` toward the
    /// sliding bandwidth window.
    pub fn observe_traffic(&self, peer: RobotId, t: f64, bytes: u64) {
        let mut peers = self.peers.lock().unwrap();
        let state = peers.entry(peer).or_insert_with(PeerState::new);
        state.traffic.push_back((t, bytes));
        while let Some(&(t0, _)) = state.traffic.front() {
            if t - t0 > BANDWIDTH_WINDOW_S {
                state.traffic.pop_front();
            } else {
                break;
            }
        }
    }

    /// Inject a physical-layer signal reading (the simulator derives one from
    /// distance; a daemon without radio access leaves it absent).
    pub fn observe_phy(&self, peer: RobotId, reading: f64) {
        let mut peers = self.peers.lock().unwrap();
        peers.entry(peer).or_insert_with(PeerState::new).phy = Some(reading);
    }

    pub fn peer(&self, rid: RobotId) -> Option<PeerMetrics> {
        let peers = self.peers.lock().unwrap();
        peers.get(&rid).map(|s| snapshot_of(rid, s))
    }

    pub fn snapshot(&self) -> Vec<PeerMetrics> {
        let peers = self.peers.lock().unwrap();
        peers.iter().map(|(rid, s)| snapshot_of(*rid, s)).collect()
    }
}

fn snapshot_of(rid: RobotId, state: &PeerState) -> PeerMetrics {
    let bytes: u64 = state.traffic.iter().map(|&(_, b)| b).sum();
    PeerMetrics {
        rid,
        status: state.status,
        last_sync_time: state.last_sync_time,
        rtt: state.rtt,
        bandwidth: bytes as f64 / BANDWIDTH_WINDOW_S,
        phy: state.phy,
    }
}

/// One transmitted frame, as consumed by `bandwidth_series`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxRecord {
    pub node: RobotId,
    /// Time the transmission finished, seconds.
    pub end_s: f64,
    pub bytes: u64,
}

/// Bin transmitted bytes into fixed-width windows per node.
///
/// A frame counts toward the bin its transmission *end* falls in. Every bin
/// from 0 to `duration_s` is present, zeros included — silence is data here.
/// With 1-second bins the values read directly as bytes per second.
pub fn bandwidth_series(
    records: impl IntoIterator<Item = TxRecord>,
    duration_s: f64,
    bin_s: f64,
) -> BTreeMap<RobotId, Vec<u64>> {
    assert!(bin_s > 0.0, "bin width must be positive");
    let bins = (duration_s / bin_s).ceil().max(1.0) as usize;
    let mut series: BTreeMap<RobotId, Vec<u64>> = BTreeMap::new();
    for record in records {
        let idx = ((record.end_s / bin_s).floor() as usize).min(bins - 1);
        series
            .entry(record.node)
            .or_insert_with(|| vec![0; bins])
            .get_mut(idx)
            .map(|slot| *slot += record.bytes);
    }
    series
}

/// Make sure a node appears in a series map even if it never transmitted.
pub fn ensure_nodes(
    series: &mut BTreeMap<RobotId, Vec<u64>>,
    nodes: impl IntoIterator<Item = RobotId>,
    duration_s: f64,
    bin_s: f64,
) {
    let bins = (duration_s / bin_s).ceil().max(1.0) as usize;
    for node in nodes {
        series.entry(node).or_insert_with(|| vec![0; bins]);
    }
}

// --- Summary schema -------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeerSummary {
    pub rid: u8,
    pub last_sync_time: Option<f64>,
    pub rtt: Option<f64>,
    pub status: LinkStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct WaitStats {
    pub mean: f64,
    pub sd: f64,
}

impl WaitStats {
    /// Population mean and standard deviation of the given samples.
    pub fn from_samples(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            sd: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct SessionCounts {
    pub complete: u64,
    pub interrupted: u64,
    pub timeout: u64,
}

impl SessionCounts {
    pub fn total(&self) -> u64 {
        self.complete + self.interrupted + self.timeout
    }

    pub fn success_rate(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.complete as f64 / self.total() as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct ByteCounts {
    pub tx: u64,
    pub rx: u64,
}

/// The `summary.json` document emitted by both the simulator and the daemon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub per_peer: Vec<PeerSummary>,
    pub message_wait: WaitStats,
    pub sessions: SessionCounts,
    pub bytes: ByteCounts,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comm_end_sets_last_sync_time() {
        let hub = MetricsHub::new();
        let peer = RobotId(2);
        hub.record_session_event(peer, SessionEvent::CommStart, 98.0).unwrap();
        hub.record_session_event(peer, SessionEvent::CommEnd, 100.0).unwrap();
        let m = hub.peer(peer).unwrap();
        assert_eq!(m.status, LinkStatus::CommEnd);
        assert_eq!(m.last_sync_time, Some(100.0));
    }

    #[test]
    fn timeout_leaves_last_sync_time_alone() {
        let hub = MetricsHub::new();
        let peer = RobotId(2);
        hub.record_session_event(peer, SessionEvent::CommEnd, 50.0).unwrap();
        hub.record_session_event(peer, SessionEvent::CommStart, 60.0).unwrap();
        hub.record_session_event(peer, SessionEvent::Timeout, 65.0).unwrap();
        let m = hub.peer(peer).unwrap();
        assert_eq!(m.status, LinkStatus::Timeout);
        assert_eq!(m.last_sync_time, Some(50.0));
    }

    #[test]
    fn out_of_order_events_are_rejected() {
        let hub = MetricsHub::new();
        let peer = RobotId(1);
        hub.record_session_event(peer, SessionEvent::CommStart, 10.0).unwrap();
        let err = hub
            .record_session_event(peer, SessionEvent::CommEnd, 9.0)
            .unwrap_err();
        assert_eq!(err, OutOfOrder { at: 9.0, previous: 10.0 });
        // Status unchanged by the rejected event.
        assert_eq!(hub.peer(peer).unwrap().status, LinkStatus::CommStart);
    }

    #[test]
    fn rtt_converges_to_constant_input() {
        let hub = MetricsHub::new();
        let peer = RobotId(3);
        hub.observe_rtt(peer, 0.2);
        assert_eq!(hub.peer(peer).unwrap().rtt, Some(0.2));
        for _ in 0..19 {
            hub.observe_rtt(peer, 0.2);
        }
        let rtt = hub.peer(peer).unwrap().rtt.unwrap();
        assert!((rtt - 0.2).abs() / 0.2 < 0.01);
    }

    #[test]
    fn bandwidth_window_drops_stale_traffic() {
        let hub = MetricsHub::new();
        let peer = RobotId(4);
        hub.observe_traffic(peer, 0.0, 1000);
        hub.observe_traffic(peer, 5.0, 1000);
        assert_eq!(hub.peer(peer).unwrap().bandwidth, 200.0);
        hub.observe_traffic(peer, 12.0, 500);
        // The t=0 record is now outside the 10 s window.
        assert_eq!(hub.peer(peer).unwrap().bandwidth, 150.0);
    }

    #[test]
    fn series_bins_by_transmission_end() {
        let node = RobotId(0);
        let series = bandwidth_series(
            [TxRecord { node, end_s: 3.2, bytes: 500 }],
            6.0,
            1.0,
        );
        assert_eq!(series[&node], vec![0, 0, 0, 500, 0, 0]);
    }

    #[test]
    fn series_sums_within_a_bin_and_keeps_zeros_explicit() {
        let node = RobotId(1);
        let series = bandwidth_series(
            [
                TxRecord { node, end_s: 2.1, bytes: 100 },
                TxRecord { node, end_s: 2.9, bytes: 50 },
            ],
            5.0,
            1.0,
        );
        assert_eq!(series[&node], vec![0, 0, 150, 0, 0]);
    }

    #[test]
    fn empty_log_yields_zero_series_for_declared_nodes() {
        let mut series = bandwidth_series([], 3.0, 1.0);
        assert!(series.is_empty());
        ensure_nodes(&mut series, [RobotId(0)], 3.0, 1.0);
        assert_eq!(series[&RobotId(0)], vec![0, 0, 0]);
    }

    #[test]
    fn series_conserves_total_bytes() {
        let records = vec![
            TxRecord { node: RobotId(0), end_s: 0.5, bytes: 10 },
            TxRecord { node: RobotId(0), end_s: 7.9, bytes: 20 },
            TxRecord { node: RobotId(1), end_s: 3.3, bytes: 30 },
        ];
        let total: u64 = records.iter().map(|r| r.bytes).sum();
        let series = bandwidth_series(records, 8.0, 1.0);
        let binned: u64 = series.values().flatten().sum();
        assert_eq!(binned, total);
    }

    #[test]
    fn summary_serializes_to_the_documented_shape() {
        let summary = Summary {
            per_peer: vec![PeerSummary {
                rid: 2,
                last_sync_time: Some(12.5),
                rtt: Some(0.004),
                status: LinkStatus::CommEnd,
            }],
            message_wait: WaitStats { mean: 0.17, sd: 0.87 },
            sessions: SessionCounts { complete: 9, interrupted: 1, timeout: 2 },
            bytes: ByteCounts { tx: 100, rx: 200 },
        };
        let json = serde_json::to_value(&summary).unwrap();
        assert_eq!(json["per_peer"][0]["rid"], 2);
        assert_eq!(json["per_peer"][0]["status"], "comm_end");
        assert_eq!(json["message_wait"]["mean"], 0.17);
        assert_eq!(json["sessions"]["complete"], 9);
        assert_eq!(json["bytes"]["rx"], 200);
    }

    #[test]
    fn wait_stats_match_hand_computation() {
        let stats = WaitStats::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert!((stats.mean - 2.5).abs() < 1e-12);
        assert!((stats.sd - (1.25f64).sqrt()).abs() < 1e-12);
        assert_eq!(WaitStats::from_samples(&[]), WaitStats::default());
    }
}
