//! MurmurHash3, x86 32-bit variant.
//!
//! The block mixing step of MurmurHash3 does not depend on the seed, so a
//! token that is hashed under many seeds (the Monte Carlo harness rehashes
//! the same vectors under 10^5 seeds) can be pre-mixed once with
//! [`PreparedKey`] and then finished per seed at a fraction of the cost.
//! Both paths produce bit-identical output.

const C1: u32 = 0xcc9e_2d51;
const C2: u32 = 0x1b87_3593;

#[inline(always)]
fn mix_k(mut k: u32) -> u32 {
    k = k.wrapping_mul(C1);
    k = k.rotate_left(15);
    k.wrapping_mul(C2)
}

#[inline(always)]
fn mix_h(mut h: u32, k: u32) -> u32 {
    h ^= k;
    h = h.rotate_left(13);
    h.wrapping_mul(5).wrapping_add(0xe654_6b64)
}

#[inline(always)]
fn fmix(mut h: u32) -> u32 {
    h ^= h >> 16;
    h = h.wrapping_mul(0x85eb_ca6b);
    h ^= h >> 13;
    h = h.wrapping_mul(0xc2b2_ae35);
    h ^ (h >> 16)
}

fn tail_word(tail: &[u8]) -> u32 {
    let mut k = 0u32;
    for (i, &b) in tail.iter().enumerate() {
        k |= (b as u32) << (8 * i);
    }
    k
}

pub fn murmur3_x86_32(data: &[u8], seed: u32) -> u32 {
    let mut h = seed;
    let mut chunks = data.chunks_exact(4);
    for chunk in &mut chunks {
        let k = u32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        h = mix_h(h, mix_k(k));
    }
    let tail = chunks.remainder();
    if !tail.is_empty() {
        h ^= mix_k(tail_word(tail));
    }
    h ^= data.len() as u32;
    fmix(h)
}

/// A key whose seed-independent block mixing has been done up front.
#[derive(Debug, Clone)]
pub struct PreparedKey {
    blocks: Box<[u32]>,
    tail: Option<u32>,
    len: u32,
}

impl PreparedKey {
    pub fn new(data: &[u8]) -> Self {
        let mut chunks = data.chunks_exact(4);
        let blocks = (&mut chunks)
            .map(|c| mix_k(u32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect();
        let rem = chunks.remainder();
        let tail = (!rem.is_empty()).then(|| mix_k(tail_word(rem)));
        PreparedKey {
            blocks,
            tail,
            len: data.len() as u32,
        }
    }

    #[inline]
    pub fn hash(&self, seed: u32) -> u32 {
        let mut h = seed;
        for &k in self.blocks.iter() {
            h = mix_h(h, k);
        }
        if let Some(k) = self.tail {
            h ^= k;
        }
        h ^= self.len;
        fmix(h)
    }
}
