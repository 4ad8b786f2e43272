use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::EngineError;
use crate::mobility::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    PacketGenerated { vru: NodeId },
    UplinkDone,
    CoreDone,
    DownlinkDone { vehicle: NodeId, slot: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time_s: f64,
    pub kind: EventKind,
    pub packet_id: u64,
}

#[derive(Debug)]
struct Entry {
    event: Event,
    seq: u64,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Reversed so the max-heap pops the earliest time, then the lowest seq.
    fn cmp(&self, other: &Self) -> Ordering {
        other.event.time_s.total_cmp(&self.event.time_s).then(other.seq.cmp(&self.seq))
    }
}

/// Min-time priority queue with FIFO order among equal timestamps.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Entry>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: Event) -> Result<(), EngineError> {
        if !(event.time_s.is_finite() && event.time_s >= 0.0) {
            return Err(EngineError::InvalidEventTime(event.time_s));
        }
        self.heap.push(Entry { event, seq: self.next_seq });
        self.next_seq += 1;
        Ok(())
    }

    pub fn next_event(&mut self) -> Result<Event, EngineError> {
        self.heap.pop().map(|e| e.event).ok_or(EngineError::EmptyQueue)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t: f64, id: u64) -> Event {
        Event { time_s: t, kind: EventKind::UplinkDone, packet_id: id }
    }

    #[test]
    fn earliest_first() {
        let mut q = EventQueue::new();
        q.push(ev(2.0, 0)).unwrap();
        q.push(ev(1.0, 1)).unwrap();
        assert_eq!(q.next_event().unwrap().time_s, 1.0);
        assert_eq!(q.next_event().unwrap().time_s, 2.0);
    }

    #[test]
    fn fifo_among_ties() {
        let mut q = EventQueue::new();
        for id in 0..5 {
            q.push(ev(1.0, id)).unwrap();
        }
        let order: Vec<u64> = (0..5).map(|_| q.next_event().unwrap().packet_id).collect();
        assert_eq!(order, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn empty_and_invalid() {
        let mut q = EventQueue::new();
        assert!(matches!(q.next_event(), Err(EngineError::EmptyQueue)));
        assert!(q.push(ev(-1.0, 0)).is_err());
        assert!(q.push(ev(f64::NAN, 0)).is_err());
        assert!(q.is_empty());
    }
}
