//! The transfer-matrix engine: an in-place column step on a vector of
//! 2^m truncated polynomials indexed by boundary bitmasks, and the table
//! of grand-canonical partition functions it produces.
//!
//! Entry `N` of the state vector is the generating polynomial (by dimer
//! count) of the rigid tilings of the rectangle with one external cell
//! appended to every row whose bit is set in `N`. Bit `j` (1-indexed,
//! row 1 at the top) has weight `2^(m-j)`, which is the convention forced
//! by the index arithmetic of the column step.

use std::io::{Read, Write};

use thiserror::Error;

use crate::coeff::{CoeffField, PrimeField};
use crate::poly::{add_assign_slices, add_shifted_slices, shift_mul_in_place, TruncPoly};

pub const MAX_ROWS: u32 = 30;
/// Default cap on a state vector's in-memory size.
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MDTM";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("row count {0} outside 1..={MAX_ROWS}")]
    RowsOutOfRange(u32),
    #[error("state vector needs {required} bytes, budget is {budget}")]
    MemoryBudget { required: u64, budget: u64 },
    #[error("cutoff must be at least 1")]
    ZeroCutoff,
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Execution knobs for the column step.
#[derive(Debug, Clone, Copy)]
pub struct StepOptions {
    pub memory_budget: u64,
    /// log2 of the number of worker slices; 0 runs single-threaded.
    pub slice_log2: u32,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            memory_budget: DEFAULT_MEMORY_BUDGET,
            slice_log2: 0,
        }
    }
}

/// The vector of 2^m boundary-state polynomials, stored as one contiguous
/// buffer of `2^m * cutoff` field elements.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<F: CoeffField> {
    field: F,
    rows: u32,
    cutoff: usize,
    columns_applied: u32,
    data: Vec<F::Elem>,
}

impl<F: CoeffField> StateVector<F> {
    /// Fresh state for zero columns: entry 0 is the constant 1 (the empty
    /// board has exactly one rigid tiling), everything else is zero.
    pub fn new(
        field: F,
        rows: u32,
        cutoff: usize,
        memory_budget: u64,
    ) -> Result<Self, TransferError> {
        if rows < 1 || rows > MAX_ROWS {
            return Err(TransferError::RowsOutOfRange(rows));
        }
        if cutoff == 0 {
            return Err(TransferError::ZeroCutoff);
        }
        let entries = 1u64 << rows;
        let required = entries
            .saturating_mul(cutoff as u64)
            .saturating_mul(std::mem::size_of::<F::Elem>() as u64);
        if required > memory_budget {
            return Err(TransferError::MemoryBudget {
                required,
                budget: memory_budget,
            });
        }
        let mut data = vec![field.zero(); (entries as usize) * cutoff];
        data[0] = field.one();
        Ok(Self {
            field,
            rows,
            cutoff,
            columns_applied: 0,
            data,
        })
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn columns_applied(&self) -> u32 {
        self.columns_applied
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    fn entry_count(&self) -> usize {
        1usize << self.rows
    }

    /// Coefficient slice of entry `n`.
    pub fn entry(&self, n: usize) -> &[F::Elem] {
        &self.data[n * self.cutoff..(n + 1) * self.cutoff]
    }

    /// Entry `n` as a polynomial (clones the coefficients).
    pub fn entry_poly(&self, n: usize) -> TruncPoly<F> {
        TruncPoly::from_coeffs(self.field.clone(), self.entry(n).to_vec())
    }

    /// Disjoint views of entries `dst < src`.
    fn entry_pair_mut(&mut self, dst: usize, src: usize) -> (&mut [F::Elem], &[F::Elem]) {
        debug_assert!(dst < src);
        let w = self.cutoff;
        let (lo, hi) = self.data.split_at_mut(src * w);
        (&mut lo[dst * w..dst * w + w], &hi[..w])
    }

    /// Advances the state by one column, in place.
    ///
    /// Phases: (a) reverse the vector by swapping `N` with `2^m-1-N`;
    /// (b) for each row `j` from the top, fold in the entries reachable by
    /// covering the row's last cell with a monomer or a vertical dimer;
    /// (c) multiply entry `N` by `z^popcount(N)`.
    pub fn column_step(&mut self) {
        let size = self.entry_count();
        let w = self.cutoff;
        // (a)
        for n in 0..size / 2 {
            let mirror = size - 1 - n;
            for k in 0..w {
                self.data.swap(n * w + k, mirror * w + k);
            }
        }
        // (b)
        let field = self.field.clone();
        for j in 1..=self.rows {
            run_bit_iteration(&field, &mut self.data, w, self.rows, j, 0);
        }
        // (c)
        run_scaling(&field, &mut self.data, w, 0);
        self.columns_applied += 1;
    }

    /// Bit-identical to [`column_step`](Self::column_step), with the work
    /// divided among `2^slice_log2` scoped threads.
    ///
    /// Slices fix the top bits of the entry index. During bit iteration `j`
    /// an entry only interacts with indices differing in bits `j` and `j-1`,
    /// so slices on the top `t` bits are independent whenever `j > t + 1`;
    /// for smaller `j` the iteration falls back to fewer slices. The swap
    /// and scaling phases partition trivially by index range.
    pub fn partitioned_step(&mut self, slice_log2: u32) {
        let t = slice_log2.min(self.rows.saturating_sub(2));
        if t == 0 {
            self.column_step();
            return;
        }
        let size = self.entry_count();
        let w = self.cutoff;
        let field = self.field.clone();
        let slices = 1usize << t;

        // (a) pair up mirrored chunks of the two halves.
        let half_elems = (size / 2) * w;
        let chunk_elems = half_elems / slices;
        let (lo, hi) = self.data.split_at_mut(half_elems);
        std::thread::scope(|s| {
            for (lo_chunk, hi_chunk) in lo
                .chunks_mut(chunk_elems)
                .zip(hi.chunks_mut(chunk_elems).rev())
            {
                s.spawn(move || swap_mirrored(lo_chunk, hi_chunk, w));
            }
        });

        // (b)
        for j in 1..=self.rows {
            let tj = t.min(j.saturating_sub(2));
            if tj == 0 {
                run_bit_iteration(&field, &mut self.data, w, self.rows, j, 0);
                continue;
            }
            let block_entries = size >> tj;
            std::thread::scope(|s| {
                for (i, block) in self.data.chunks_mut(block_entries * w).enumerate() {
                    let field = &field;
                    let rows = self.rows;
                    s.spawn(move || {
                        run_bit_iteration(field, block, w, rows, j, i * block_entries)
                    });
                }
            });
        }

        // (c)
        let block_entries = size >> t;
        std::thread::scope(|s| {
            for (i, block) in self.data.chunks_mut(block_entries * w).enumerate() {
                let field = &field;
                s.spawn(move || run_scaling(field, block, w, i * block_entries));
            }
        });
        self.columns_applied += 1;
    }

    /// Column step visiting the bit-iteration entries in an arbitrary
    /// permuted order; traversal order must not matter because every read
    /// entry has the current bit set and is never written in the same
    /// iteration. Exists for differential testing only.
    #[cfg(test)]
    pub(crate) fn column_step_permuted(&mut self, seed: u64) {
        let size = self.entry_count();
        let w = self.cutoff;
        for n in 0..size / 2 {
            let mirror = size - 1 - n;
            for k in 0..w {
                self.data.swap(n * w + k, mirror * w + k);
            }
        }
        let field = self.field.clone();
        let mut order: Vec<usize> = (0..size).collect();
        // Fisher-Yates with a splitmix64 stream.
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^ (z >> 31)
        };
        for i in (1..size).rev() {
            order.swap(i, (next() % (i as u64 + 1)) as usize);
        }
        for j in 1..=self.rows {
            let bit = 1usize << (self.rows - j);
            let vert = (j > 1).then(|| 1usize << (self.rows - j + 1));
            for &n in &order {
                if n & bit != 0 {
                    continue;
                }
                let (dst, src) = self.entry_pair_mut(n, n + bit);
                add_assign_slices(&field, dst, src);
                if let Some(vb) = vert {
                    if n & vb == 0 {
                        let (dst, src) = self.entry_pair_mut(n, n + bit + vb);
                        add_shifted_slices(&field, dst, src);
                    }
                }
            }
        }
        run_scaling(&field, &mut self.data, w, 0);
        self.columns_applied += 1;
    }
}

/// One iteration of the bit loop over a contiguous block of entries whose
/// global indices start at `base`. The caller guarantees that for every
/// entry in the block the partners `n + 2^(m-j)` and `n + 3*2^(m-j)` fall
/// inside the same block.
fn run_bit_iteration<F: CoeffField>(
    field: &F,
    block: &mut [F::Elem],
    w: usize,
    rows: u32,
    j: u32,
    base: usize,
) {
    let bit = 1usize << (rows - j);
    let vert = (j > 1).then(|| 1usize << (rows - j + 1));
    let entries = block.len() / w;
    for local in 0..entries {
        let n = base + local;
        if n & bit != 0 {
            continue;
        }
        let dst_off = local * w;
        {
            let (lo, hi) = block.split_at_mut((local + bit) * w);
            add_assign_slices(field, &mut lo[dst_off..dst_off + w], &hi[..w]);
        }
        if let Some(vb) = vert {
            if n & vb == 0 {
                let (lo, hi) = block.split_at_mut((local + bit + vb) * w);
                add_shifted_slices(field, &mut lo[dst_off..dst_off + w], &hi[..w]);
            }
        }
    }
}

/// Multiplies every entry of the block by `z^popcount(global index)`.
fn run_scaling<F: CoeffField>(field: &F, block: &mut [F::Elem], w: usize, base: usize) {
    for (local, entry) in block.chunks_mut(w).enumerate() {
        let d = (base + local).count_ones() as usize;
        shift_mul_in_place(field, entry, d);
    }
}

/// Swaps entry `k` of the low chunk with entry `len-1-k` of the mirrored
/// high chunk.
fn swap_mirrored<E>(lo_chunk: &mut [E], hi_chunk: &mut [E], w: usize) {
    let entries = lo_chunk.len() / w;
    for k in 0..entries {
        let mirror = entries - 1 - k;
        for i in 0..w {
            std::mem::swap(&mut lo_chunk[k * w + i], &mut hi_chunk[mirror * w + i]);
        }
    }
}

/// The partition functions of all boards with a fixed number of rows:
/// element `k` (0-based) is the polynomial for `k+1` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaTable<F: CoeffField> {
    rows: u32,
    thetas: Vec<TruncPoly<F>>,
}

impl<F: CoeffField> ThetaTable<F> {
    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Partition function of the `rows x cols` board, `cols` 1-based.
    pub fn get(&self, cols: u32) -> Option<&TruncPoly<F>> {
        self.thetas.get(cols as usize - 1)
    }

    pub fn as_slice(&self) -> &[TruncPoly<F>] {
        &self.thetas
    }
}

/// Computes the partition functions of the `rows x k` boards for
/// `k = 1..=cols`, truncated to `cutoff` coefficients.
pub fn compute_theta<F: CoeffField>(
    field: &F,
    rows: u32,
    cols: u32,
    cutoff: usize,
    opts: &StepOptions,
) -> Result<ThetaTable<F>, TransferError> {
    let mut state = StateVector::new(field.clone(), rows, cutoff, opts.memory_budget)?;
    let thetas = advance_collecting(&mut state, cols, opts.slice_log2);
    Ok(ThetaTable { rows, thetas })
}

/// Applies column steps until `cols` columns have been absorbed, collecting
/// entry 0 after each step. Resuming from a checkpoint yields only the
/// polynomials for the remaining columns.
pub fn advance_collecting<F: CoeffField>(
    state: &mut StateVector<F>,
    cols: u32,
    slice_log2: u32,
) -> Vec<TruncPoly<F>> {
    let mut thetas = Vec::new();
    while state.columns_applied() < cols {
        if slice_log2 == 0 {
            state.column_step();
        } else {
            state.partitioned_step(slice_log2);
        }
        let theta = state.entry_poly(0);
        debug_assert!(state.field().is_one(theta.coeff(0)), "theta(0) must be 1");
        thetas.push(theta);
    }
    thetas
}

impl StateVector<PrimeField> {
    /// Serializes the state: a fixed header followed by the residues as
    /// little-endian `u32`.
    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(CHECKPOINT_MAGIC)?;
        out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        out.write_all(&self.rows.to_le_bytes())?;
        out.write_all(&self.field.modulus().to_le_bytes())?;
        out.write_all(&(self.cutoff as u32).to_le_bytes())?;
        out.write_all(&self.columns_applied.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)
    }

    pub fn read_checkpoint<R: Read>(
        mut input: R,
        memory_budget: u64,
    ) -> Result<Self, TransferError> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(TransferError::BadCheckpoint("wrong magic".into()));
        }
        let mut word = [0u8; 4];
        let mut next = |input: &mut R| -> Result<u32, TransferError> {
            input.read_exact(&mut word)?;
            Ok(u32::from_le_bytes(word))
        };
        let version = next(&mut input)?;
        if version != CHECKPOINT_VERSION {
            return Err(TransferError::BadCheckpoint(format!(
                "unsupported version {version}"
            )));
        }
        let rows = next(&mut input)?;
        let modulus = next(&mut input)?;
        let cutoff = next(&mut input)? as usize;
        let columns_applied = next(&mut input)?;
        let field = PrimeField::new(modulus)
            .map_err(|e| TransferError::BadCheckpoint(e.to_string()))?;
        let mut state = Self::new(field, rows, cutoff, memory_budget)?;
        let mut buf = vec![0u8; state.data.len() * 4];
        input.read_exact(&mut buf)?;
        for (v, chunk) in state.data.iter_mut().zip(buf.chunks_exact(4)) {
            let raw = u32::from_le_bytes(chunk.try_into().unwrap());
            if raw >= modulus {
                return Err(TransferError::BadCheckpoint(format!(
                    "residue {raw} not reduced modulo {modulus}"
                )));
            }
            *v = raw;
        }
        state.columns_applied = columns_applied;
        Ok(state)
    }
}
