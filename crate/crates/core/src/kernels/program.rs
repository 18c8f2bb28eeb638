//! A small SIMT-style program representation for the base TRSM kernel.
//!
//! A [`WorkgroupProgram`] is a list of phases separated by barriers. Each
//! phase holds one straight-line instruction list per thread; the same body
//! runs in every workgroup, one workgroup per lane of `B`. Threads own a few
//! private registers and share named slots of workgroup memory.

use crate::error::{LinalgError, Result};
use crate::kernels::base::DEFAULT_TILE_LIMIT;
use crate::kernels::frame::LowerFrame;
use crate::variants::{Side, TriangularSpec};

pub const REGISTERS: usize = 4;

pub type Reg = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Addr {
    /// Element `index` of shared slot `slot` in the executing workgroup.
    Shared { slot: usize, index: usize },
    /// Entry of the triangular matrix (global memory, read-only).
    A { row: usize, col: usize },
    /// Element `index` along the executing workgroup's lane of `B`.
    B { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Instr {
    Const {
        dst: Reg,
        value: f64,
    },
    Load {
        dst: Reg,
        addr: Addr,
    },
    Store {
        addr: Addr,
        src: Reg,
    },
    Mul {
        dst: Reg,
        lhs: Reg,
        rhs: Reg,
    },
    Div {
        dst: Reg,
        lhs: Reg,
        rhs: Reg,
    },
    /// `dst <- acc - lhs * rhs`
    MulSub {
        dst: Reg,
        acc: Reg,
        lhs: Reg,
        rhs: Reg,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedSlot {
    pub name: String,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Phase {
    /// `threads[t]` is the code thread `t` runs in this phase.
    pub threads: Vec<Vec<Instr>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkgroupProgram {
    pub side: Side,
    pub group_count: usize,
    pub threads_per_group: usize,
    /// Length of each lane of `B` (the triangular dimension).
    pub lane_len: usize,
    pub shared_slots: Vec<SharedSlot>,
    pub phases: Vec<Phase>,
}

pub const SLOT_DIAG: usize = 0;
pub const SLOT_B: usize = 1;
pub const SLOT_A: usize = 2;

impl WorkgroupProgram {
    pub fn phase_count(&self) -> usize {
        self.phases.len()
    }

    pub fn barrier_count(&self) -> usize {
        self.phases.len().saturating_sub(1)
    }

    pub fn slot(&self, name: &str) -> Option<usize> {
        self.shared_slots.iter().position(|s| s.name == name)
    }

    /// Drop the barrier after phase `phase`, fusing it with the next one.
    pub fn remove_barrier(&mut self, phase: usize) -> Result<()> {
        if phase + 1 >= self.phases.len() {
            return Err(LinalgError::InvalidArgument(format!(
                "no barrier after phase {phase} in a {}-phase program",
                self.phases.len()
            )));
        }
        let next = self.phases.remove(phase + 1);
        for (code, extra) in self.phases[phase].threads.iter_mut().zip(next.threads) {
            code.extend(extra);
        }
        Ok(())
    }

    /// Structural checks: thread counts, register numbers, slot bounds.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LinalgError::InvalidArgument(msg));
        for (p, phase) in self.phases.iter().enumerate() {
            if phase.threads.len() != self.threads_per_group {
                return bad(format!(
                    "phase {p} has {} thread bodies, expected {}",
                    phase.threads.len(),
                    self.threads_per_group
                ));
            }
            for instr in phase.threads.iter().flatten() {
                let (regs, addr): (&[Reg], Option<Addr>) = match instr {
                    Instr::Const { dst, .. } => (std::slice::from_ref(dst), None),
                    Instr::Load { dst, addr } => (std::slice::from_ref(dst), Some(*addr)),
                    Instr::Store { addr, src } => (std::slice::from_ref(src), Some(*addr)),
                    Instr::Mul { dst, lhs, rhs } | Instr::Div { dst, lhs, rhs } => {
                        if [*dst, *lhs, *rhs].iter().any(|&r| r >= REGISTERS) {
                            return bad(format!("register out of range in phase {p}"));
                        }
                        (&[], None)
                    }
                    Instr::MulSub { dst, acc, lhs, rhs } => {
                        if [*dst, *acc, *lhs, *rhs].iter().any(|&r| r >= REGISTERS) {
                            return bad(format!("register out of range in phase {p}"));
                        }
                        (&[], None)
                    }
                };
                if regs.iter().any(|&r| r >= REGISTERS) {
                    return bad(format!("register out of range in phase {p}"));
                }
                match addr {
                    Some(Addr::Shared { slot, index }) => {
                        if self.shared_slots.get(slot).is_none_or(|s| index >= s.len) {
                            return bad(format!("shared access {slot}[{index}] out of range"));
                        }
                    }
                    Some(Addr::A { row, col }) if row >= self.lane_len || col >= self.lane_len => {
                        return bad(format!("A[{row}, {col}] out of range"));
                    }
                    Some(Addr::B { index }) if index >= self.lane_len => {
                        return bad(format!("B lane index {index} out of range"));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// Build the barrier-phased base TRSM for `spec` on an `n x n` triangle and
/// `m` lanes.
///
/// Thread `r` owns logical row `r`. Phase 0 loads the row, scales it by
/// `alpha` and divides by the diagonal; phase `p >= 1` has every row
/// `r >= p` subtract its normalized coefficient times the now-final row
/// `p - 1`. Row `p` is final at the end of phase `p`, and its owner writes it
/// back then. Every shared write in phase `p` is read by another thread only
/// in a later phase.
pub fn build_trsm_program(spec: &TriangularSpec, n: usize, m: usize) -> Result<WorkgroupProgram> {
    spec.validate()?;
    if n > DEFAULT_TILE_LIMIT {
        return Err(LinalgError::TileTooLarge {
            n,
            limit: DEFAULT_TILE_LIMIT,
        });
    }
    let frame = LowerFrame::new(spec, n);
    let unit = spec.is_unit();
    let (coef, acc, tmp, alpha) = (0, 1, 2, 3);
    let a_addr = |r, c| {
        let (row, col) = frame.a_index(r, c);
        Addr::A { row, col }
    };
    let b_addr = |r| Addr::B {
        index: frame.physical(r),
    };
    let shared = |slot, index| Addr::Shared { slot, index };

    let mut phases = Vec::with_capacity(n);
    if n > 0 {
        let load = (0..n)
            .map(|r| {
                let mut code = vec![
                    Instr::Const {
                        dst: alpha,
                        value: spec.alpha,
                    },
                    Instr::Load {
                        dst: acc,
                        addr: b_addr(r),
                    },
                    Instr::Mul {
                        dst: acc,
                        lhs: acc,
                        rhs: alpha,
                    },
                ];
                if !unit {
                    code.push(Instr::Load {
                        dst: coef,
                        addr: a_addr(r, r),
                    });
                    code.push(Instr::Store {
                        addr: shared(SLOT_DIAG, r),
                        src: coef,
                    });
                    code.push(Instr::Div {
                        dst: acc,
                        lhs: acc,
                        rhs: coef,
                    });
                }
                code.push(Instr::Store {
                    addr: shared(SLOT_B, r),
                    src: acc,
                });
                if r == 0 {
                    code.push(Instr::Store {
                        addr: b_addr(0),
                        src: acc,
                    });
                }
                code
            })
            .collect();
        phases.push(Phase { threads: load });
    }
    for p in 1..n {
        let threads = (0..n)
            .map(|r| {
                if r < p {
                    return Vec::new();
                }
                let mut code = vec![Instr::Load {
                    dst: coef,
                    addr: a_addr(r, p - 1),
                }];
                if !unit {
                    code.push(Instr::Load {
                        dst: tmp,
                        addr: shared(SLOT_DIAG, r),
                    });
                    code.push(Instr::Div {
                        dst: coef,
                        lhs: coef,
                        rhs: tmp,
                    });
                }
                code.extend([
                    Instr::Store {
                        addr: shared(SLOT_A, r),
                        src: coef,
                    },
                    Instr::Load {
                        dst: coef,
                        addr: shared(SLOT_A, r),
                    },
                    Instr::Load {
                        dst: tmp,
                        addr: shared(SLOT_B, p - 1),
                    },
                    Instr::Load {
                        dst: acc,
                        addr: shared(SLOT_B, r),
                    },
                    Instr::MulSub {
                        dst: acc,
                        acc,
                        lhs: coef,
                        rhs: tmp,
                    },
                    Instr::Store {
                        addr: shared(SLOT_B, r),
                        src: acc,
                    },
                ]);
                if r == p {
                    code.push(Instr::Store {
                        addr: b_addr(r),
                        src: acc,
                    });
                }
                code
            })
            .collect();
        phases.push(Phase { threads });
    }

    let slot = |name: &str| SharedSlot {
        name: name.into(),
        len: n,
    };
    Ok(WorkgroupProgram {
        side: spec.side,
        group_count: m,
        threads_per_group: n,
        lane_len: n,
        shared_slots: vec![slot("diag"), slot("b_col"), slot("a_col")],
        phases,
    })
}
