//! Back-and-forth residual propagation.
//!
//! A spatial residual `S_o` estimated at step `o` is carried to another step
//! by subtracting the temporal differences between them: `F` moving forward
//! in time, `P` moving backward. The past FIFO holds residuals propagated
//! forward from the last N steps, the future FIFO residuals propagated back
//! from the next N steps. Each FIFO shift is evaluated in f64 and stored in
//! the buffer's scalar type.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor3};

fn sub_wide<T: Scalar>(a: &Tensor3<T>, b: &Tensor3<T>, context: &'static str) -> Result<Tensor3<T>> {
    a.zip_map(b, context, |x, y| T::from_f64(x.to_f64() - y.to_f64()))
}

/// `R^{t-1}_{forth,t} = S_{t-1} - F_{t-1}`.
pub fn propagate_adjacent_forward<T: Scalar>(s_prev: &Tensor3<T>, f_prev: &Tensor3<T>) -> Result<Tensor3<T>> {
    sub_wide(s_prev, f_prev, "propagate_adjacent_forward")
}

/// `R^{t+1}_{back,t} = S_{t+1} - P_{t+1}`.
pub fn propagate_adjacent_backward<T: Scalar>(s_next: &Tensor3<T>, p_next: &Tensor3<T>) -> Result<Tensor3<T>> {
    sub_wide(s_next, p_next, "propagate_adjacent_backward")
}

fn accumulate<T: Scalar>(s_origin: &Tensor3<T>, diffs: &[&Tensor3<T>], context: &'static str) -> Result<Tensor3<T>> {
    let (first, rest) = diffs
        .split_first()
        .ok_or_else(|| Error::InvalidArgument(format!("{context}: empty difference list")))?;
    let mut acc = sub_wide(s_origin, first, context)?;
    for d in rest {
        acc = sub_wide(&acc, d, context)?;
    }
    Ok(acc)
}

/// `s_origin - ΣF`, subtracting the list in the order given. Pass the
/// differences from the origin step toward the target to match the FIFO
/// rounding exactly.
pub fn accumulate_forward<T: Scalar>(s_origin: &Tensor3<T>, f_list: &[&Tensor3<T>]) -> Result<Tensor3<T>> {
    accumulate(s_origin, f_list, "accumulate_forward")
}

/// `s_origin - ΣP`, subtracting in the order given.
pub fn accumulate_backward<T: Scalar>(s_origin: &Tensor3<T>, p_list: &[&Tensor3<T>]) -> Result<Tensor3<T>> {
    accumulate(s_origin, p_list, "accumulate_backward")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Target advances; entries come from earlier steps and shift by `-F`.
    Forth,
    /// Target retreats; entries come from later steps and shift by `-P`.
    Back,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Slot<T: Scalar = f32> {
    pub value: Tensor3<T>,
    /// Step the residual was estimated at; `None` while still zero-initialized.
    pub origin: Option<usize>,
}

/// Fixed-size FIFO of propagated residuals for one direction. Slot `l`
/// (1-based) holds the residual from step `target ∓ l`.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationFifo<T: Scalar = f32> {
    direction: Direction,
    shape: (usize, usize, usize),
    slots: Vec<Slot<T>>,
    target: isize,
}

impl<T: Scalar> PropagationFifo<T> {
    /// Zero-filled FIFO of `n` slots whose current target is `target`.
    pub fn new(direction: Direction, n: usize, shape: (usize, usize, usize), target: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("buffer size must be >= 1".into()));
        }
        let (c, h, w) = shape;
        let slots = (0..n)
            .map(|_| Slot {
                value: Tensor3::zeros(c, h, w),
                origin: None,
            })
            .collect();
        Ok(PropagationFifo {
            direction,
            shape,
            slots,
            target: target as isize,
        })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    /// Current target step. Negative once a backward FIFO has moved past 0.
    pub fn target(&self) -> isize {
        self.target
    }

    pub fn slots(&self) -> &[Slot<T>] {
        &self.slots
    }

    /// All N entries, nearest step first, zeros included.
    pub fn entries(&self) -> Vec<&Tensor3<T>> {
        self.slots.iter().map(|s| &s.value).collect()
    }

    pub fn filled_entries(&self) -> Vec<&Tensor3<T>> {
        self.slots.iter().filter(|s| s.origin.is_some()).map(|s| &s.value).collect()
    }

    fn check(&self, t: &Tensor3<T>, context: &'static str) -> Result<()> {
        if t.shape() != self.shape {
            return Err(Error::shape(
                context,
                format!("{:?} vs buffer entry {:?}", t.shape(), self.shape),
            ));
        }
        Ok(())
    }

    fn origin(&self) -> Result<usize> {
        usize::try_from(self.target)
            .map_err(|_| Error::InvalidArgument(format!("no step {} to propagate from", self.target)))
    }

    /// Leaves the current target step: evicts the farthest entry, shifts the
    /// filled entries by `-diff`, inserts `s_origin - diff` in slot 1 and
    /// moves the target one step on. `s_origin` and `diff` belong to the
    /// step being left.
    pub fn update(&mut self, s_origin: &Tensor3<T>, diff: &Tensor3<T>) -> Result<()> {
        self.check(s_origin, "PropagationFifo::update")?;
        self.check(diff, "PropagationFifo::update")?;
        let origin = self.origin()?;
        self.apply(s_origin, diff, origin)
    }

    fn apply(&mut self, s_origin: &Tensor3<T>, diff: &Tensor3<T>, origin: usize) -> Result<()> {
        self.slots.pop();
        for slot in self.slots.iter_mut().filter(|s| s.origin.is_some()) {
            slot.value = sub_wide(&slot.value, diff, "PropagationFifo::update")?;
        }
        self.slots.insert(
            0,
            Slot {
                value: sub_wide(s_origin, diff, "PropagationFifo::update")?,
                origin: Some(origin),
            },
        );
        self.target += match self.direction {
            Direction::Forth => 1,
            Direction::Back => -1,
        };
        Ok(())
    }
}

/// N-past and N-future buffers. Each side keeps its own target: the past
/// side advances with every update and the future side retreats.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementBuffers<T: Scalar = f32> {
    pub past: PropagationFifo<T>,
    pub future: PropagationFifo<T>,
}

impl<T: Scalar> RefinementBuffers<T> {
    pub fn new(n: usize, shape: (usize, usize, usize), past_target: usize, future_target: usize) -> Result<Self> {
        Ok(RefinementBuffers {
            past: PropagationFifo::new(Direction::Forth, n, shape, past_target)?,
            future: PropagationFifo::new(Direction::Back, n, shape, future_target)?,
        })
    }

    pub fn n(&self) -> usize {
        self.past.len()
    }

    /// Updates both sides. Everything is validated before either side is
    /// touched, so on error the buffers are unchanged.
    pub fn buffer_update(
        &mut self,
        s_past_origin: &Tensor3<T>,
        s_future_origin: &Tensor3<T>,
        f_t: &Tensor3<T>,
        p_t: &Tensor3<T>,
    ) -> Result<()> {
        for t in [s_past_origin, s_future_origin, f_t, p_t] {
            self.past.check(t, "buffer_update")?;
        }
        let past_origin = self.past.origin()?;
        let future_origin = self.future.origin()?;
        self.past.apply(s_past_origin, f_t, past_origin)?;
        self.future.apply(s_future_origin, p_t, future_origin)
    }
}

/// Per-step `S`, `F`, `P` histories, index-aligned by step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SequenceLedger<T: Scalar = f32> {
    pub s: Vec<Tensor3<T>>,
    pub f: Vec<Tensor3<T>>,
    pub p: Vec<Tensor3<T>>,
}

impl<T: Scalar> SequenceLedger<T> {
    pub fn new() -> Self {
        SequenceLedger {
            s: Vec::new(),
            f: Vec::new(),
            p: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn push(&mut self, s: Tensor3<T>, f: Tensor3<T>, p: Tensor3<T>) -> Result<()> {
        s.expect_same_shape(&f, "SequenceLedger::push")?;
        s.expect_same_shape(&p, "SequenceLedger::push")?;
        if let Some(first) = self.s.first() {
            first.expect_same_shape(&s, "SequenceLedger::push")?;
        }
        self.s.push(s);
        self.f.push(f);
        self.p.push(p);
        Ok(())
    }

    /// Same histories in reverse time order with the roles of `F` and `P`
    /// swapped.
    pub fn reversed(&self) -> Self {
        let rev = |v: &[Tensor3<T>]| v.iter().rev().cloned().collect();
        SequenceLedger {
            s: rev(&self.s),
            f: rev(&self.p),
            p: rev(&self.f),
        }
    }
}

/// Residual from step `origin` carried to step `target`, recomputed from the
/// ledger alone.
pub fn oracle_direct<T: Scalar>(ledger: &SequenceLedger<T>, origin: usize, target: usize) -> Result<Tensor3<T>> {
    if origin == target {
        return Err(Error::InvalidArgument(format!("origin and target are both {origin}")));
    }
    let len = ledger.len();
    if let Some(&missing) = [origin, target].iter().find(|&&i| i >= len) {
        return Err(Error::MissingHistory(missing));
    }
    if origin < target {
        let fs: Vec<&Tensor3<T>> = ledger.f[origin..target].iter().collect();
        accumulate_forward(&ledger.s[origin], &fs)
    } else {
        let ps: Vec<&Tensor3<T>> = ledger.p[target + 1..=origin].iter().rev().collect();
        accumulate_backward(&ledger.s[origin], &ps)
    }
}
