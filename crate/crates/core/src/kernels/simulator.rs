//! Deterministic replay of a [`WorkgroupProgram`] under a chosen intra-phase
//! thread order, with access tracing and barrier-hazard detection.
//!
//! Within a phase each thread runs its instruction list to completion before
//! the next thread in the schedule starts. A hazard is any pair of accesses
//! to the same location from different threads, at least one of them a
//! write, that run in the same phase. Lanes of `B` belong to a single group
//! and `A` is read-only, so groups never conflict with each other.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::{MatRef, MatrixBuffer};
use crate::error::{LinalgError, Result};
use crate::kernels::program::{Addr, Instr, WorkgroupProgram, REGISTERS};
use crate::variants::Side;

/// Order in which the threads of a group execute inside each phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    Identity,
    Reversed,
    /// Independent pseudo-random permutation per phase.
    Seeded(u64),
    /// Explicit permutation per phase.
    PerPhase(Vec<Vec<usize>>),
}

impl Schedule {
    fn orders(&self, phases: usize, threads: usize) -> Result<Vec<Vec<usize>>> {
        let identity: Vec<usize> = (0..threads).collect();
        Ok(match self {
            Schedule::Identity => vec![identity; phases],
            Schedule::Reversed => vec![identity.into_iter().rev().collect(); phases],
            Schedule::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..phases)
                    .map(|_| {
                        let mut order = identity.clone();
                        order.shuffle(&mut rng);
                        order
                    })
                    .collect()
            }
            Schedule::PerPhase(orders) => {
                if orders.len() < phases {
                    return Err(LinalgError::InvalidArgument(format!(
                        "schedule covers {} of {phases} phases",
                        orders.len()
                    )));
                }
                for order in orders {
                    let mut sorted = order.clone();
                    sorted.sort_unstable();
                    if sorted != identity {
                        return Err(LinalgError::InvalidArgument(format!(
                            "{order:?} is not a permutation of 0..{threads}"
                        )));
                    }
                }
                orders[..phases].to_vec()
            }
        })
    }
}

/// Every combination of per-phase thread permutations: `(threads!)^phases`
/// schedules.
pub fn exhaustive_schedules(threads: usize, phases: usize) -> impl Iterator<Item = Schedule> {
    let perms: Vec<Vec<usize>> = (0..threads).permutations(threads).collect();
    (0..phases)
        .map(move |_| perms.clone())
        .multi_cartesian_product()
        .map(Schedule::PerPhase)
}

/// Every distinct intra-phase order for `program`: threads with an empty
/// body in a phase are left in place and only the active ones are permuted.
/// Covers the same observable executions as [`exhaustive_schedules`] with
/// far fewer schedules.
pub fn distinct_schedules(program: &WorkgroupProgram) -> impl Iterator<Item = Schedule> {
    let per_phase: Vec<Vec<Vec<usize>>> = program
        .phases
        .iter()
        .map(|phase| {
            let (idle, active): (Vec<usize>, Vec<usize>) =
                (0..phase.threads.len()).partition(|&t| phase.threads[t].is_empty());
            let k = active.len();
            active
                .into_iter()
                .permutations(k)
                .map(|perm| idle.iter().copied().chain(perm).collect())
                .collect()
        })
        .collect();
    per_phase.into_iter().multi_cartesian_product().map(Schedule::PerPhase)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    Shared { group: usize, slot: usize, index: usize },
    A { row: usize, col: usize },
    B { row: usize, col: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AccessKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Access {
    pub group: usize,
    pub thread: usize,
    pub phase: usize,
    pub location: Location,
    pub kind: AccessKind,
}

/// Every memory access of one simulated run, in execution order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KernelTrace {
    accesses: Vec<Access>,
}

impl KernelTrace {
    pub fn accesses(&self) -> &[Access] {
        &self.accesses
    }

    /// Ordered accesses of one thread.
    pub fn thread(&self, group: usize, thread: usize) -> impl Iterator<Item = &Access> + '_ {
        self.accesses
            .iter()
            .filter(move |a| a.group == group && a.thread == thread)
    }

    /// Phases never decrease along any thread's access list.
    pub fn phases_monotone(&self) -> bool {
        let mut last = std::collections::HashMap::new();
        self.accesses.iter().all(|a| {
            let prev = last.insert((a.group, a.thread), a.phase).unwrap_or(0);
            prev <= a.phase
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HazardKind {
    WriteWrite,
    ReadWrite,
}

/// A conflicting pair of unsynchronized accesses. Threads are
/// `(group, thread)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hazard {
    pub location: Location,
    pub phase: usize,
    pub first: (usize, usize),
    pub second: (usize, usize),
    pub kind: HazardKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HazardReport {
    pub hazards: Vec<Hazard>,
}

impl HazardReport {
    pub fn is_empty(&self) -> bool {
        self.hazards.is_empty()
    }

    pub fn len(&self) -> usize {
        self.hazards.len()
    }
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub result: MatrixBuffer<f64>,
    pub trace: KernelTrace,
    pub hazards: HazardReport,
}

/// Accesses seen so far at one location in the current phase. Two distinct
/// readers are enough to name a conflicting partner for any later writer.
#[derive(Clone, Copy, Default)]
struct PhaseCell {
    stamp: usize,
    writer: Option<usize>,
    readers: [Option<usize>; 2],
}

struct HazardTracker {
    threads: usize,
    shared_len: usize,
    n: usize,
    b_rows: usize,
    global_base: usize,
    cells: Vec<PhaseCell>,
    hazards: Vec<Hazard>,
}

impl HazardTracker {
    fn new(groups: usize, threads: usize, shared_len: usize, n: usize, b_rows: usize, b_cols: usize) -> Self {
        let global_base = groups * shared_len;
        HazardTracker {
            threads,
            shared_len,
            n,
            b_rows,
            global_base,
            cells: vec![PhaseCell::default(); global_base + n * n + b_rows * b_cols],
            hazards: Vec::new(),
        }
    }

    fn cell_id(&self, location: Location, slot_offsets: &[usize]) -> usize {
        match location {
            Location::Shared { group, slot, index } => group * self.shared_len + slot_offsets[slot] + index,
            Location::A { row, col } => self.global_base + row + col * self.n,
            Location::B { row, col } => self.global_base + self.n * self.n + row + col * self.b_rows,
        }
    }

    fn record(&mut self, access: &Access, slot_offsets: &[usize]) {
        let who = access.group * self.threads + access.thread;
        let id = self.cell_id(access.location, slot_offsets);
        let cell = &mut self.cells[id];
        let stamp = access.phase + 1;
        if cell.stamp != stamp {
            *cell = PhaseCell {
                stamp,
                ..PhaseCell::default()
            };
        }
        let mut found: [Option<(usize, HazardKind)>; 2] = [None; 2];
        match access.kind {
            AccessKind::Write => {
                found[0] = cell.writer.filter(|&w| w != who).map(|w| (w, HazardKind::WriteWrite));
                found[1] = cell
                    .readers
                    .iter()
                    .flatten()
                    .find(|&&r| r != who)
                    .map(|&r| (r, HazardKind::ReadWrite));
                cell.writer.get_or_insert(who);
            }
            AccessKind::Read => {
                found[0] = cell.writer.filter(|&w| w != who).map(|w| (w, HazardKind::ReadWrite));
                match cell.readers {
                    [None, _] => cell.readers[0] = Some(who),
                    [Some(r), None] if r != who => cell.readers[1] = Some(who),
                    _ => {}
                }
            }
        }
        for (other, kind) in found.into_iter().flatten() {
            let me = (access.group, access.thread);
            let other = (other / self.threads, other % self.threads);
            let (first, second) = if other <= me { (other, me) } else { (me, other) };
            self.hazards.push(Hazard {
                location: access.location,
                phase: access.phase,
                first,
                second,
                kind,
            });
        }
    }

    fn finish(mut self) -> HazardReport {
        self.hazards.sort_unstable();
        self.hazards.dedup();
        HazardReport { hazards: self.hazards }
    }
}

/// Execute `program` on inputs `a` (triangle) and `b` (right-hand sides)
/// under `schedule`.
pub fn simulate(
    program: &WorkgroupProgram,
    a: MatRef<'_, f64>,
    b: MatRef<'_, f64>,
    schedule: &Schedule,
) -> Result<SimOutcome> {
    program.validate()?;
    let n = program.lane_len;
    if a.rows() != n || a.cols() != n {
        return Err(LinalgError::shape(
            "simulate",
            format!("program expects a {n}x{n} triangle, got {}x{}", a.rows(), a.cols()),
        ));
    }
    let (lane_len, lanes) = match program.side {
        Side::Left => (b.rows(), b.cols()),
        Side::Right => (b.cols(), b.rows()),
    };
    if lane_len != n || lanes != program.group_count {
        return Err(LinalgError::shape(
            "simulate",
            format!(
                "program expects {} lanes of length {n}, B is {}x{}",
                program.group_count,
                b.rows(),
                b.cols()
            ),
        ));
    }

    let threads = program.threads_per_group;
    let groups = program.group_count;
    let orders = schedule.orders(program.phase_count(), threads)?;

    let mut slot_offsets = Vec::with_capacity(program.shared_slots.len());
    let mut shared_len = 0;
    for slot in &program.shared_slots {
        slot_offsets.push(shared_len);
        shared_len += slot.len;
    }

    let mut result = b.to_owned();
    // Uninitialized shared memory reads back as NaN.
    let mut shared = vec![f64::NAN; groups * shared_len];
    let mut regs = vec![[0.0f64; REGISTERS]; groups * threads];
    let mut trace = KernelTrace::default();
    let mut tracker = HazardTracker::new(groups, threads, shared_len, n, b.rows(), b.cols());

    let resolve = |group: usize, addr: Addr| match addr {
        Addr::Shared { slot, index } => Location::Shared { group, slot, index },
        Addr::A { row, col } => Location::A { row, col },
        Addr::B { index } => match program.side {
            Side::Left => Location::B { row: index, col: group },
            Side::Right => Location::B { row: group, col: index },
        },
    };

    for (phase, (body, order)) in program.phases.iter().zip(&orders).enumerate() {
        for group in 0..groups {
            for &thread in order {
                let r = &mut regs[group * threads + thread];
                for instr in &body.threads[thread] {
                    let mut touch = |addr: Addr, kind: AccessKind| {
                        let access = Access {
                            group,
                            thread,
                            phase,
                            location: resolve(group, addr),
                            kind,
                        };
                        tracker.record(&access, &slot_offsets);
                        trace.accesses.push(access);
                        access.location
                    };
                    match *instr {
                        Instr::Const { dst, value } => r[dst] = value,
                        Instr::Load { dst, addr } => {
                            r[dst] = match touch(addr, AccessKind::Read) {
                                Location::Shared { group, slot, index } => {
                                    shared[group * shared_len + slot_offsets[slot] + index]
                                }
                                Location::A { row, col } => a.get(row, col),
                                Location::B { row, col } => result.get(row, col),
                            }
                        }
                        Instr::Store { addr, src } => match touch(addr, AccessKind::Write) {
                            Location::Shared { group, slot, index } => {
                                shared[group * shared_len + slot_offsets[slot] + index] = r[src]
                            }
                            Location::A { .. } => {
                                return Err(LinalgError::InvalidArgument(
                                    "program writes to the read-only triangle".into(),
                                ))
                            }
                            Location::B { row, col } => result.set(row, col, r[src]),
                        },
                        Instr::Mul { dst, lhs, rhs } => r[dst] = r[lhs] * r[rhs],
                        Instr::Div { dst, lhs, rhs } => r[dst] = r[lhs] / r[rhs],
                        Instr::MulSub { dst, acc, lhs, rhs } => r[dst] = r[acc] - r[lhs] * r[rhs],
                    }
                }
            }
        }
    }

    Ok(SimOutcome {
        result,
        trace,
        hazards: tracker.finish(),
    })
}
