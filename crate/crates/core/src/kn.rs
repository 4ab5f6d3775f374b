//! General `(k, n)` XOR threshold sharing.
//!
//! The secret is cut into pieces `s_1 … s_{p-1}` (with `p` the prime in
//! [`ThresholdParams`]) and an implicit zero piece `s_0`. With random pads
//! `r^h_j` for `h < k-1`, `j < p`, share `i` holds the rows
//!
//! ```text
//! S(i, j) = r^0_{j} ⊕ r^1_{i+j} ⊕ … ⊕ r^{k-2}_{(k-2)i+j} ⊕ s_{j-i}     (j < p-1)
//! ```
//!
//! with every subscript reduced modulo `p`. The pad `r^0_{p-1}` is never
//! referenced.
//!
//! Reconstruction uses a GF(2) matrix that maps the stacked rows of any `k`
//! shares to the secret pieces. It is found by writing every share row as a
//! linear combination of secret pieces and pads and solving, per piece, for
//! the combination of rows in which all pad terms cancel.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::TryCryptoRng;

use crate::block::{fill_random, xor_assign, Block, ShareBlock};
use crate::error::{invalid, Error, Result};
use crate::gf2::BitMatrix;
use crate::params::ThresholdParams;

/// The secret pieces `s_1 … s_{p-1}`, stored contiguously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PieceVector {
    piece_octets: usize,
    data: Vec<u8>,
}

impl PieceVector {
    /// Cuts `secret` into `params.pieces()` pieces. The length must be exactly
    /// `params.secret_octets()`.
    pub fn from_bytes(params: &ThresholdParams, secret: impl Into<Vec<u8>>) -> Result<Self> {
        let data = secret.into();
        if data.len() != params.secret_octets() {
            return Err(invalid(format!(
                "secret of {} octets, parameters expect {}",
                data.len(),
                params.secret_octets()
            )));
        }
        Ok(PieceVector {
            piece_octets: params.piece_octets(),
            data,
        })
    }

    pub fn zeros(params: &ThresholdParams) -> Self {
        PieceVector {
            piece_octets: params.piece_octets(),
            data: vec![0; params.secret_octets()],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.piece_octets
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Piece `s_m` for `1 <= m <= len()`.
    pub fn piece(&self, m: usize) -> &[u8] {
        &self.data[(m - 1) * self.piece_octets..m * self.piece_octets]
    }

    /// `s_1 ∥ … ∥ s_{p-1}`.
    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }
}

/// Pads `r^h_j`, `(k-1) × p` entries of `piece_bits` each.
#[derive(Clone, PartialEq, Eq)]
pub struct RandomPadMatrix {
    width: usize,
    piece_octets: usize,
    data: Vec<u8>,
}

impl RandomPadMatrix {
    pub fn generate<R: TryCryptoRng + ?Sized>(params: &ThresholdParams, rng: &mut R) -> Result<Self> {
        let mut m = Self::zeros(params);
        fill_random(rng, &mut m.data)?;
        // r^0_{p-1} is discarded.
        let unused = m.offset(0, params.prime - 1);
        m.data[unused..unused + m.piece_octets].fill(0);
        Ok(m)
    }

    pub fn zeros(params: &ThresholdParams) -> Self {
        RandomPadMatrix {
            width: params.prime,
            piece_octets: params.piece_octets(),
            data: vec![0; (params.k - 1) * params.prime * params.piece_octets()],
        }
    }

    /// Builds the pad matrix from row-major raw octets.
    pub fn from_bytes(params: &ThresholdParams, data: impl Into<Vec<u8>>) -> Result<Self> {
        let data = data.into();
        let want = (params.k - 1) * params.prime * params.piece_octets();
        if data.len() != want {
            return Err(invalid(format!(
                "pad matrix of {} octets, parameters expect {want}",
                data.len()
            )));
        }
        Ok(RandomPadMatrix {
            width: params.prime,
            piece_octets: params.piece_octets(),
            data,
        })
    }

    fn offset(&self, h: usize, j: usize) -> usize {
        (h * self.width + j) * self.piece_octets
    }

    pub fn entry(&self, h: usize, j: usize) -> &[u8] {
        let o = self.offset(h, j);
        &self.data[o..o + self.piece_octets]
    }

    fn rows(&self) -> usize {
        self.data.len() / (self.width * self.piece_octets)
    }
}

impl std::fmt::Debug for RandomPadMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RandomPadMatrix({}x{})", self.rows(), self.width)
    }
}

/// One share of the general scheme: `p - 1` rows of `piece_bits` each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneralShare {
    pub index: usize,
    piece_octets: usize,
    data: Vec<u8>,
}

impl GeneralShare {
    pub fn from_bytes(params: &ThresholdParams, index: usize, data: impl Into<Vec<u8>>) -> Result<Self> {
        let data = data.into();
        if data.len() != params.secret_octets() {
            return Err(invalid(format!(
                "share of {} octets, parameters expect {}",
                data.len(),
                params.secret_octets()
            )));
        }
        if index >= params.n {
            return Err(invalid(format!("share index {index} out of range 0..{}", params.n)));
        }
        Ok(GeneralShare {
            index,
            piece_octets: params.piece_octets(),
            data,
        })
    }

    pub fn row_count(&self) -> usize {
        self.data.len() / self.piece_octets
    }

    pub fn row(&self, j: usize) -> &[u8] {
        &self.data[j * self.piece_octets..(j + 1) * self.piece_octets]
    }

    /// `S(i,0) ∥ … ∥ S(i,p-2)`.
    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.data
    }
}

/// Produces the `n` shares of `secret`.
pub fn share_kn(secret: &PieceVector, params: &ThresholdParams, rand: &RandomPadMatrix) -> Result<Vec<GeneralShare>> {
    params.validate()?;
    let rows = params.pieces();
    let po = params.piece_octets();
    if secret.piece_octets != po || secret.len() != rows {
        return Err(invalid("secret dimensions do not match parameters"));
    }
    if rand.piece_octets != po || rand.width != params.prime || rand.rows() != params.k - 1 {
        return Err(invalid("pad matrix dimensions do not match parameters"));
    }

    let p = params.prime;
    let mut shares = Vec::with_capacity(params.n);
    for i in 0..params.n {
        let mut data = vec![0u8; rows * po];
        for (j, row) in data.chunks_exact_mut(po).enumerate() {
            for h in 0..params.k - 1 {
                xor_assign(row, rand.entry(h, (h * i + j) % p));
            }
            let m = (j + p - i % p) % p;
            if m != 0 {
                xor_assign(row, secret.piece(m));
            }
        }
        shares.push(GeneralShare {
            index: i,
            piece_octets: po,
            data,
        });
    }
    Ok(shares)
}

/// Linear map from the stacked rows of `k` chosen shares to the secret pieces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconMatrix {
    indices: Vec<usize>,
    params: ThresholdParams,
    matrix: BitMatrix,
}

impl ReconMatrix {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Row `m` has column `t·(p-1) + j` set when row `j` of the `t`-th
    /// chosen share contributes to piece `s_{m+1}`.
    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    /// Applies the map to shares ordered as `indices()`.
    fn apply(&self, shares: &[&GeneralShare]) -> PieceVector {
        let rows = self.params.pieces();
        let po = self.params.piece_octets();
        let mut out = vec![0u8; rows * po];
        for (m, piece) in out.chunks_exact_mut(po).enumerate() {
            for col in self.matrix.row_ones(m) {
                xor_assign(piece, shares[col / rows].row(col % rows));
            }
        }
        PieceVector {
            piece_octets: po,
            data: out,
        }
    }
}

/// Variable numbering of the generation system: secret pieces first, then
/// every referenced pad.
struct Variables {
    pieces: usize,
    prime: usize,
}

impl Variables {
    fn count(&self, k: usize) -> usize {
        self.pieces + (k - 1) * self.prime - 1
    }

    /// Column of `s_m`, `1 <= m < p`.
    fn secret(&self, m: usize) -> usize {
        m - 1
    }

    /// Column of `r^h_j`; `r^0_{p-1}` has none.
    fn pad(&self, h: usize, j: usize) -> usize {
        debug_assert!(!(h == 0 && j == self.prime - 1));
        if h == 0 {
            self.pieces + j
        } else {
            self.pieces + (self.prime - 1) + (h - 1) * self.prime + j
        }
    }
}

/// Builds the reconstruction matrix for the shares `indices`.
pub fn build_recon_matrix(indices: &[usize], params: &ThresholdParams) -> Result<ReconMatrix> {
    params.validate()?;
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != indices.len() {
        return Err(invalid(format!("duplicate share indices in {indices:?}")));
    }
    if sorted.len() != params.k {
        return Err(Error::InsufficientShares {
            needed: params.k,
            got: sorted.len(),
        });
    }
    if let Some(&bad) = sorted.iter().find(|&&i| i >= params.n) {
        return Err(invalid(format!("share index {bad} out of range 0..{}", params.n)));
    }

    let p = params.prime;
    let rows = params.pieces();
    let vars = Variables { pieces: rows, prime: p };
    let nvars = vars.count(params.k);

    // A: one equation per collected share row, over all variables.
    let mut a = BitMatrix::zeros(params.k * rows, nvars);
    for (t, &i) in sorted.iter().enumerate() {
        for j in 0..rows {
            let eq = t * rows + j;
            for h in 0..params.k - 1 {
                a.flip(eq, vars.pad(h, (h * i + j) % p));
            }
            let m = (j + p - i % p) % p;
            if m != 0 {
                a.flip(eq, vars.secret(m));
            }
        }
    }

    // Find y_m with y_mᵀ·A = e_m for every secret piece, i.e. Aᵀ·Y = E.
    let mut targets = BitMatrix::zeros(nvars, rows);
    for m in 1..p {
        targets.set(vars.secret(m), m - 1, true);
    }
    let y = a.transpose().solve(&targets).ok_or_else(|| Error::Singular {
        indices: sorted.clone(),
    })?;

    Ok(ReconMatrix {
        indices: sorted,
        params: *params,
        matrix: y.transpose(),
    })
}

/// Recovers the secret pieces from `k` shares with distinct indices. Extra
/// shares beyond the first `k` are ignored.
pub fn reconstruct_kn(shares: &[GeneralShare], params: &ThresholdParams) -> Result<PieceVector> {
    let chosen = select_shares(shares, params)?;
    let indices: Vec<usize> = chosen.iter().map(|s| s.index).collect();
    let m = build_recon_matrix(&indices, params)?;
    Ok(m.apply(&chosen))
}

/// Like [`reconstruct_kn`], reusing a matrix built for the same indices.
pub fn reconstruct_kn_with(matrix: &ReconMatrix, shares: &[GeneralShare]) -> Result<PieceVector> {
    let chosen = select_shares(shares, &matrix.params)?;
    if chosen.iter().map(|s| s.index).ne(matrix.indices.iter().copied()) {
        return Err(invalid("shares do not match the reconstruction matrix indices"));
    }
    Ok(matrix.apply(&chosen))
}

fn select_shares<'a>(shares: &'a [GeneralShare], params: &ThresholdParams) -> Result<Vec<&'a GeneralShare>> {
    if shares.len() < params.k {
        return Err(Error::InsufficientShares {
            needed: params.k,
            got: shares.len(),
        });
    }
    let mut chosen: Vec<&GeneralShare> = shares.iter().take(params.k).collect();
    chosen.sort_by_key(|s| s.index);
    if chosen.windows(2).any(|w| w[0].index == w[1].index) {
        return Err(invalid("duplicate share indices"));
    }
    for s in &chosen {
        if s.piece_octets != params.piece_octets() || s.row_count() != params.pieces() {
            return Err(invalid(format!("share {} has wrong dimensions", s.index)));
        }
    }
    Ok(chosen)
}

type CacheKey = (ThresholdParams, Vec<usize>);

/// Reconstruction matrices keyed by share subset, shared across threads.
#[derive(Debug, Default)]
pub struct ReconCache {
    inner: Mutex<HashMap<CacheKey, Arc<ReconMatrix>>>,
}

impl ReconCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, indices: &[usize], params: &ThresholdParams) -> Result<Arc<ReconMatrix>> {
        let mut key = indices.to_vec();
        key.sort_unstable();
        let key = (*params, key);
        if let Some(m) = self.inner.lock().unwrap().get(&key) {
            return Ok(m.clone());
        }
        let m = Arc::new(build_recon_matrix(indices, params)?);
        self.inner.lock().unwrap().insert(key, m.clone());
        Ok(m)
    }
}

/// Re-expresses a `(2,3)` secret block as general-scheme pieces for
/// parameters `(2, 3, 3)` with `piece_bits = d/2`: `s_1 = SC2`, `s_2 = SC1`.
pub fn pieces_from_block23(block: &Block) -> Result<PieceVector> {
    let bytes = block.as_bytes();
    let half = half_octets(bytes.len())?;
    let mut data = Vec::with_capacity(bytes.len());
    data.extend_from_slice(&bytes[half..]);
    data.extend_from_slice(&bytes[..half]);
    Ok(PieceVector {
        piece_octets: half,
        data,
    })
}

/// Inverse of [`pieces_from_block23`].
pub fn block23_from_pieces(pieces: &PieceVector) -> Result<Block> {
    let bits = crate::block::BlockBits::new((pieces.data.len() * 8) as u32)?;
    let half = pieces.piece_octets;
    let mut data = Vec::with_capacity(pieces.data.len());
    data.extend_from_slice(&pieces.data[half..]);
    data.extend_from_slice(&pieces.data[..half]);
    Block::new(bits, data)
}

/// A `(2,3)` share block viewed as a general share: rows are its high and low
/// halves, unchanged.
pub fn general_from_share23(share: &ShareBlock) -> Result<GeneralShare> {
    let half = half_octets(share.data.len())?;
    if share.index > 2 {
        return Err(invalid(format!("share index {} out of range for (2,3)", share.index)));
    }
    Ok(GeneralShare {
        index: share.index,
        piece_octets: half,
        data: share.data.clone(),
    })
}

/// A `(2, 3, 3)` general share viewed as a `(2,3)` share block.
pub fn share23_from_general(share: &GeneralShare) -> ShareBlock {
    ShareBlock {
        index: share.index,
        data: share.data.clone(),
    }
}

fn half_octets(len: usize) -> Result<usize> {
    if len < 2 || !len.is_multiple_of(2) {
        return Err(invalid("general-scheme view needs octet-aligned halves (d >= 16)"));
    }
    Ok(len / 2)
}
