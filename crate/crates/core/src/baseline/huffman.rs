//! Canonical scalar Huffman code.
//!
//! Codeword lengths come from the usual two-smallest-merge; the tie order of
//! the merge queue is pinned (count, then first-seen order) and codewords are
//! reassigned canonically (sorted by length, then symbol) so identical inputs
//! always produce identical codes. Decoding walks a binary tree rather than
//! scanning prefixes, with identical behavior.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeMap};

use crate::baseline::SymbolHistogram;
use crate::bitio::{BitReader, BitWriter};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanCode {
    /// symbol -> (codeword bits packed in the low end, length)
    codewords: BTreeMap<i64, (u64, u32)>,
}

impl HuffmanCode {
    pub fn codeword(&self, symbol: i64) -> Option<(u64, u32)> {
        self.codewords.get(&symbol).copied()
    }

    pub fn lengths(&self) -> impl Iterator<Item = (i64, u32)> + '_ {
        self.codewords.iter().map(|(&s, &(_, len))| (s, len))
    }

    /// Average codeword length in bits under the histogram's probabilities.
    pub fn average_length(&self, hist: &SymbolHistogram) -> f64 {
        self.codewords
            .iter()
            .map(|(&s, &(_, len))| hist.probability(s) * len as f64)
            .sum()
    }

    /// Total bits needed to code `count(symbol)` occurrences of each symbol.
    pub fn total_bits(&self, hist: &SymbolHistogram) -> u64 {
        hist.counts()
            .iter()
            .map(|(&s, &c)| c * self.codewords[&s].1 as u64)
            .sum()
    }

    pub fn kraft_sum(&self) -> f64 {
        self.codewords
            .values()
            .map(|&(_, len)| (-(len as f64)).exp2())
            .sum()
    }

    /// Size in bytes of the serialized code table: a symbol count followed by
    /// (symbol as signed 32-bit, length as 8-bit) pairs. Counted toward the
    /// scalar-Huffman compressed sizes, which must ship their model.
    pub fn table_bytes(&self) -> u64 {
        4 + 5 * self.codewords.len() as u64
    }
}

/// Build the optimal prefix code for a histogram. A single-symbol alphabet
/// gets a one-bit codeword.
pub fn huffman_build(hist: &SymbolHistogram) -> Result<HuffmanCode> {
    if hist.symbol_count() == 0 {
        return Err(Error::invalid("cannot build a code for an empty histogram"));
    }
    let symbols: Vec<(i64, u64)> = hist.counts().iter().map(|(&s, &c)| (s, c)).collect();
    let lengths = if symbols.len() == 1 {
        vec![1u32]
    } else {
        code_lengths(&symbols)
    };

    // canonical assignment: sort by (length, symbol), allocate increasing codes
    let mut order: Vec<(u32, i64)> = symbols
        .iter()
        .zip(&lengths)
        .map(|(&(s, _), &len)| (len, s))
        .collect();
    order.sort_unstable();
    let mut codewords = BTreeMap::new();
    let mut code = 0u64;
    let mut prev_len = 0u32;
    for (len, symbol) in order {
        code <<= len - prev_len;
        codewords.insert(symbol, (code, len));
        code += 1;
        prev_len = len;
    }
    Ok(HuffmanCode { codewords })
}

/// Codeword lengths via the two-smallest merge over (count, tie id).
fn code_lengths(symbols: &[(i64, u64)]) -> Vec<u32> {
    #[derive(Debug)]
    enum Node {
        Leaf(usize),
        Merge(usize, usize),
    }
    let mut nodes: Vec<Node> = (0..symbols.len()).map(Node::Leaf).collect();
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = symbols
        .iter()
        .enumerate()
        .map(|(i, &(_, c))| Reverse((c, i)))
        .collect();
    while heap.len() > 1 {
        let Reverse((ca, a)) = heap.pop().unwrap();
        let Reverse((cb, b)) = heap.pop().unwrap();
        let id = nodes.len();
        nodes.push(Node::Merge(a, b));
        heap.push(Reverse((ca + cb, id)));
    }
    let root = heap.pop().unwrap().0 .1;
    let mut lengths = vec![0u32; symbols.len()];
    let mut stack = vec![(root, 0u32)];
    while let Some((id, depth)) = stack.pop() {
        match nodes[id] {
            Node::Leaf(sym) => lengths[sym] = depth,
            Node::Merge(a, b) => {
                stack.push((a, depth + 1));
                stack.push((b, depth + 1));
            }
        }
    }
    lengths
}

/// Concatenate the codewords of `msg`.
pub fn huffman_encode(code: &HuffmanCode, msg: &[i64]) -> Result<BitWriter> {
    let mut out = BitWriter::new();
    for &s in msg {
        let (bits, len) = code
            .codeword(s)
            .ok_or_else(|| Error::invalid(format!("symbol {s} not present in the code")))?;
        out.write_bits(bits, len)?;
    }
    Ok(out)
}

/// Inverse of [`huffman_encode`]; consumes exactly `count` symbols.
pub fn huffman_decode(code: &HuffmanCode, bits: &mut BitReader, count: usize) -> Result<Vec<i64>> {
    // decode tree: index 0 is the root; negative child = leaf payload index
    #[derive(Clone, Copy)]
    struct TreeNode {
        children: [i32; 2],
    }
    let mut tree = vec![TreeNode { children: [0, 0] }];
    let mut leaves = Vec::new();
    for (&symbol, &(word, len)) in &code.codewords {
        let mut node = 0usize;
        for i in (0..len).rev() {
            let bit = ((word >> i) & 1) as usize;
            if i == 0 {
                leaves.push(symbol);
                tree[node].children[bit] = -(leaves.len() as i32);
            } else {
                if tree[node].children[bit] == 0 {
                    tree.push(TreeNode { children: [0, 0] });
                    tree[node].children[bit] = (tree.len() - 1) as i32;
                }
                node = tree[node].children[bit] as usize;
            }
        }
    }

    let mut msg = Vec::with_capacity(count);
    for _ in 0..count {
        let mut node = 0usize;
        loop {
            let bit = bits
                .read_bit()
                .map_err(|_| Error::corrupt("huffman stream ended inside a codeword"))?;
            let next = tree[node].children[bit as usize];
            if next < 0 {
                msg.push(leaves[(-next - 1) as usize]);
                break;
            }
            // child slots are only ever set to pushed nodes (index >= 1) or
            // leaves (< 0); zero means no codeword continues this way
            if next == 0 {
                return Err(Error::corrupt("bit pattern matches no codeword"));
            }
            node = next as usize;
        }
    }
    Ok(msg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::{entropy, epmd};

    #[test]
    fn dyadic_probabilities_get_ideal_lengths() {
        // {a: 1/2, b: 1/4, c: 1/4}
        let h = epmd(&[10, 10, 20, 30]).unwrap();
        let code = huffman_build(&h).unwrap();
        let lens: BTreeMap<i64, u32> = code.lengths().collect();
        assert_eq!(lens[&10], 1);
        assert_eq!(lens[&20], 2);
        assert_eq!(lens[&30], 2);
    }

    #[test]
    fn uniform_four_symbols_all_two_bits() {
        let h = epmd(&[0, 1, 2, 3]).unwrap();
        let code = huffman_build(&h).unwrap();
        assert!(code.lengths().all(|(_, len)| len == 2));
    }

    #[test]
    fn single_symbol_gets_one_bit() {
        let h = epmd(&[42; 7]).unwrap();
        let code = huffman_build(&h).unwrap();
        assert_eq!(code.codeword(42), Some((0, 1)));
        assert!(code.kraft_sum() <= 1.0);
    }

    #[test]
    fn optimality_bound_and_kraft_on_random_histograms() {
        let mut state = 0xdeadbeefcafef00du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..50 {
            let n_sym = 2 + (next() % 40) as i64;
            let mut levels = Vec::new();
            for s in 0..n_sym {
                for _ in 0..1 + next() % 100 {
                    levels.push(s);
                }
            }
            let h = epmd(&levels).unwrap();
            let code = huffman_build(&h).unwrap();
            let avg = code.average_length(&h);
            let ent = entropy(&h);
            assert!(avg >= ent - 1e-9, "avg {avg} < H {ent}");
            assert!(avg < ent + 1.0, "avg {avg} >= H+1 {}", ent + 1.0);
            assert!(code.kraft_sum() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn encode_length_is_sum_of_codeword_lengths() {
        let h = epmd(&[1, 1, 2]).unwrap();
        let code = huffman_build(&h).unwrap();
        let out = huffman_encode(&code, &[1, 1, 2]).unwrap();
        assert_eq!(out.bit_len() as u64, code.total_bits(&h));
        let empty = huffman_encode(&code, &[]).unwrap();
        assert_eq!(empty.bit_len(), 0);
    }

    #[test]
    fn roundtrip_random_messages() {
        let mut state = 0x123456789abcdefu64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..20 {
            let msg: Vec<i64> = (0..200).map(|_| (next() % 17) as i64 - 8).collect();
            let h = epmd(&msg).unwrap();
            let code = huffman_build(&h).unwrap();
            let mut packed = huffman_encode(&code, &msg).unwrap();
            packed.align_to_byte();
            let bytes = packed.into_bytes();
            let mut reader = BitReader::new(&bytes);
            let decoded = huffman_decode(&code, &mut reader, msg.len()).unwrap();
            assert_eq!(decoded, msg);
        }
    }

    #[test]
    fn truncated_stream_is_an_error() {
        let msg = vec![0i64, 1, 2, 3, 0, 1, 2, 3, 3, 3];
        let h = epmd(&msg).unwrap();
        let code = huffman_build(&h).unwrap();
        let packed = huffman_encode(&code, &msg).unwrap();
        let bytes = packed.into_bytes();
        let cut = &bytes[..1];
        let mut reader = BitReader::new(cut);
        assert!(huffman_decode(&code, &mut reader, msg.len()).is_err());
    }

    #[test]
    fn unknown_symbol_is_an_error() {
        let h = epmd(&[1, 2]).unwrap();
        let code = huffman_build(&h).unwrap();
        assert!(huffman_encode(&code, &[3]).is_err());
    }

    #[test]
    fn deterministic_across_builds() {
        let h = epmd(&[5, 5, 6, 6, 7, 8]).unwrap(); // plenty of ties
        let a = huffman_build(&h).unwrap();
        let b = huffman_build(&h).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn table_serialization_size() {
        let h = epmd(&[1, 2, 3]).unwrap();
        let code = huffman_build(&h).unwrap();
        assert_eq!(code.table_bytes(), 4 + 5 * 3);
    }
}
