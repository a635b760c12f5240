use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::TxSlot;

/// What a UAV observed in one transmission slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[repr(u8)]
pub enum Setting {
    #[default]
    Nothing = 0,
    Received = 1,
    DecodeFailure = 2,
}

impl Setting {
    pub fn bits(self) -> u8 {
        self as u8
    }

    pub fn from_bits(bits: u8) -> Result<Setting> {
        match bits {
            0b00 => Ok(Setting::Nothing),
            0b01 => Ok(Setting::Received),
            0b10 => Ok(Setting::DecodeFailure),
            other => Err(Error::RecordDecode(format!("invalid setting bits {other:02b}"))),
        }
    }

    /// Available for self-allocation: anything but a decoded packet.
    pub fn is_available(self) -> bool {
        self != Setting::Received
    }
}

/// Per-transmission-slot observations, slot 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Record(pub Vec<Setting>);

impl Record {
    pub fn new(settings: Vec<Setting>) -> Self {
        Record(settings)
    }

    pub fn silent(len: usize) -> Self {
        Record(vec![Setting::Nothing; len])
    }

    pub fn from_values(values: &[u8]) -> Result<Self> {
        values.iter().map(|&v| Setting::from_bits(v)).collect::<Result<Vec<_>>>().map(Record)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, slot: TxSlot) -> Option<Setting> {
        self.0.get(slot.index()).copied()
    }

    pub fn settings(&self) -> &[Setting] {
        &self.0
    }

    pub fn encode(&self) -> EncodedRecord {
        encode_record(self)
    }
}

/// Two bits per slot, slot 1 in the most significant bits of the first byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedRecord {
    pub bytes: Vec<u8>,
    pub slots: usize,
}

impl EncodedRecord {
    pub fn bit_len(&self) -> usize {
        self.slots * 2
    }
}

impl fmt::Display for EncodedRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.bit_len() {
            let bit = (self.bytes[i / 8] >> (7 - i % 8)) & 1;
            write!(f, "{bit}")?;
        }
        Ok(())
    }
}

pub fn encode_record(record: &Record) -> EncodedRecord {
    let slots = record.len();
    let mut bytes = vec![0u8; (slots * 2).div_ceil(8)];
    for (i, s) in record.0.iter().enumerate() {
        let shift = 6 - 2 * (i % 4);
        bytes[i / 4] |= s.bits() << shift;
    }
    EncodedRecord { bytes, slots }
}

pub fn decode_record(encoded: &EncodedRecord) -> Result<Record> {
    if encoded.bytes.len() * 4 < encoded.slots {
        return Err(Error::RecordDecode(format!(
            "{} bytes cannot hold {} slots",
            encoded.bytes.len(),
            encoded.slots
        )));
    }
    (0..encoded.slots)
        .map(|i| Setting::from_bits((encoded.bytes[i / 4] >> (6 - 2 * (i % 4))) & 0b11))
        .collect::<Result<Vec<_>>>()
        .map(Record)
}
