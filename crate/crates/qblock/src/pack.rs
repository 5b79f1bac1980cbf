//! Byte streams to plaintext blocks and back, most significant bit first.

use qblock_core::{BitString, PlainBlock};

use crate::error::CliError;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn bytes_to_blocks(bytes: &[u8], n: usize) -> Result<Vec<PlainBlock>, CliError> {
    if n == 0 {
        return Err(CliError::Input("block size must be positive".into()));
    }
    let bits = bytes.len() * 8;
    if !bits.is_multiple_of(n) {
        let unit = n / gcd(n, 8);
        let padded = bytes.len().div_ceil(unit) * unit;
        return Err(CliError::Input(format!(
            "input is {bits} bits, not a multiple of the {n}-bit block size; \
             pad it to a multiple of {unit} bytes (next valid length {padded} bytes)"
        )));
    }
    let stream: Vec<bool> = bytes.iter().flat_map(|&b| (0..8).rev().map(move |i| b >> i & 1 == 1)).collect();
    Ok(stream.chunks(n).map(|c| PlainBlock::new(BitString::new(c.to_vec()))).collect())
}

pub fn blocks_to_bytes(blocks: &[PlainBlock]) -> Result<Vec<u8>, CliError> {
    let stream: Vec<bool> = blocks.iter().flat_map(|b| b.bits.as_slice().iter().copied()).collect();
    if !stream.len().is_multiple_of(8) {
        return Err(CliError::Input(format!("{} decrypted bits do not fill whole bytes", stream.len())));
    }
    Ok(stream.chunks(8).map(|c| c.iter().fold(0u8, |acc, &b| acc << 1 | b as u8)).collect())
}
