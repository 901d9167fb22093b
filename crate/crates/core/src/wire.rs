//! Byte-exact codec for the TPM 1.2 `TPM_GetRandom` command and its response.
//!
//! Both messages share a 14-byte big-endian header:
//!
//! ```text
//! request:  tag(2) param_size(4) ordinal(4)     bytes_requested(4)
//! response: tag(2) param_size(4) return_code(4) random_bytes_size(4) random_bytes(..)
//! ```
//!
//! `param_size` is always the total encoded length of the message.

use thiserror::Error;

/// Request tag: no authorization session.
pub const TAG_RQU_COMMAND: u16 = 0x00C1;
/// Response tag paired with [`TAG_RQU_COMMAND`].
pub const TAG_RSP_COMMAND: u16 = 0x00C4;
/// Ordinal of `TPM_GetRandom`.
pub const ORD_GET_RANDOM: u32 = 0x0000_0046;
/// Encoded size of a request, and of a response header.
pub const HEADER_LEN: usize = 14;

/// TPM 1.2 return codes used on the failure path.
pub mod rc {
    pub const SUCCESS: u32 = 0x00;
    pub const BAD_PARAMETER: u32 = 0x03;
    pub const FAIL: u32 = 0x09;
    pub const BAD_ORDINAL: u32 = 0x0A;
    pub const BAD_PARAM_SIZE: u32 = 0x19;
    pub const BAD_TAG: u32 = 0x1E;
}

const OFF_TAG: usize = 0;
const OFF_PARAM_SIZE: usize = 2;
const OFF_ORDINAL: usize = 6;
const OFF_RETURN_CODE: usize = 6;
const OFF_COUNT: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("message truncated: need at least {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("message oversized: expected {expected} bytes, got {actual}")]
    Oversized { expected: usize, actual: usize },

    #[error("invalid {field} at offset {offset}: found {found:#x}, expected {expected}")]
    InvalidField {
        field: &'static str,
        offset: usize,
        found: u64,
        expected: &'static str,
    },

    #[error("framing error in {field} at offset {offset}: declares {declared}, actual {actual}")]
    Framing {
        field: &'static str,
        offset: usize,
        declared: u64,
        actual: u64,
    },
}

impl WireError {
    /// Name of the offending field, when the error is tied to one.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            WireError::InvalidField { field, .. } | WireError::Framing { field, .. } => Some(field),
            _ => None,
        }
    }

    /// Byte offset of the first violation.
    pub fn offset(&self) -> usize {
        match self {
            WireError::Truncated { actual, .. } => *actual,
            WireError::Oversized { expected, .. } => *expected,
            WireError::InvalidField { offset, .. } | WireError::Framing { offset, .. } => *offset,
        }
    }

    /// TPM return code a device reports when a request fails to decode with this error.
    pub fn return_code(&self) -> u32 {
        match self {
            WireError::Truncated { .. } | WireError::Oversized { .. } | WireError::Framing { .. } => rc::BAD_PARAM_SIZE,
            WireError::InvalidField { field, .. } => match *field {
                "tag" => rc::BAD_TAG,
                "ordinal" => rc::BAD_ORDINAL,
                "param_size" => rc::BAD_PARAM_SIZE,
                _ => rc::BAD_PARAMETER,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GetRandomRequest {
    pub tag: u16,
    pub param_size: u32,
    pub ordinal: u32,
    pub bytes_requested: u32,
}

impl GetRandomRequest {
    pub fn new(bytes_requested: u32) -> Self {
        Self {
            tag: TAG_RQU_COMMAND,
            param_size: HEADER_LEN as u32,
            ordinal: ORD_GET_RANDOM,
            bytes_requested,
        }
    }

    pub fn validate(&self) -> Result<(), WireError> {
        if self.tag != TAG_RQU_COMMAND {
            return Err(invalid("tag", OFF_TAG, self.tag.into(), "0xc1"));
        }
        if self.param_size != HEADER_LEN as u32 {
            return Err(invalid("param_size", OFF_PARAM_SIZE, self.param_size.into(), "14"));
        }
        if self.ordinal != ORD_GET_RANDOM {
            return Err(invalid("ordinal", OFF_ORDINAL, self.ordinal.into(), "0x46"));
        }
        if self.bytes_requested == 0 {
            return Err(invalid("bytes_requested", OFF_COUNT, 0, ">= 1"));
        }
        Ok(())
    }

    pub fn encode(&self) -> Result<[u8; HEADER_LEN], WireError> {
        self.validate()?;
        let mut out = [0u8; HEADER_LEN];
        out[0..2].copy_from_slice(&self.tag.to_be_bytes());
        out[2..6].copy_from_slice(&self.param_size.to_be_bytes());
        out[6..10].copy_from_slice(&self.ordinal.to_be_bytes());
        out[10..14].copy_from_slice(&self.bytes_requested.to_be_bytes());
        Ok(out)
    }

    pub fn decode(raw: &[u8]) -> Result<Self, WireError> {
        match raw.len() {
            n if n < HEADER_LEN => {
                return Err(WireError::Truncated {
                    expected: HEADER_LEN,
                    actual: n,
                })
            }
            n if n > HEADER_LEN => {
                return Err(WireError::Oversized {
                    expected: HEADER_LEN,
                    actual: n,
                })
            }
            _ => {}
        }
        let req = Self {
            tag: be_u16(raw, OFF_TAG),
            param_size: be_u32(raw, OFF_PARAM_SIZE),
            ordinal: be_u32(raw, OFF_ORDINAL),
            bytes_requested: be_u32(raw, OFF_COUNT),
        };
        req.validate()?;
        Ok(req)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GetRandomResponse {
    pub tag: u16,
    pub param_size: u32,
    pub return_code: u32,
    pub random_bytes_size: u32,
    pub random_bytes: Vec<u8>,
}

impl GetRandomResponse {
    pub fn success(random_bytes: Vec<u8>) -> Self {
        let size = random_bytes.len() as u32;
        Self {
            tag: TAG_RSP_COMMAND,
            param_size: HEADER_LEN as u32 + size,
            return_code: rc::SUCCESS,
            random_bytes_size: size,
            random_bytes,
        }
    }

    pub fn failure(return_code: u32) -> Self {
        Self {
            tag: TAG_RSP_COMMAND,
            param_size: HEADER_LEN as u32,
            return_code,
            random_bytes_size: 0,
            random_bytes: Vec::new(),
        }
    }

    pub fn is_success(&self) -> bool {
        self.return_code == rc::SUCCESS
    }

    pub fn validate(&self) -> Result<(), WireError> {
        if self.tag != TAG_RSP_COMMAND {
            return Err(invalid("tag", OFF_TAG, self.tag.into(), "0xc4"));
        }
        if self.random_bytes_size as usize != self.random_bytes.len() {
            return Err(WireError::Framing {
                field: "random_bytes_size",
                offset: OFF_COUNT,
                declared: self.random_bytes_size.into(),
                actual: self.random_bytes.len() as u64,
            });
        }
        let total = HEADER_LEN as u64 + u64::from(self.random_bytes_size);
        if u64::from(self.param_size) != total {
            return Err(WireError::Framing {
                field: "param_size",
                offset: OFF_PARAM_SIZE,
                declared: self.param_size.into(),
                actual: total,
            });
        }
        if self.return_code != rc::SUCCESS && self.random_bytes_size != 0 {
            return Err(invalid(
                "random_bytes_size",
                OFF_COUNT,
                self.random_bytes_size.into(),
                "0 on failure",
            ));
        }
        Ok(())
    }

    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        self.validate()?;
        let mut out = Vec::with_capacity(self.param_size as usize);
        out.extend_from_slice(&self.tag.to_be_bytes());
        out.extend_from_slice(&self.param_size.to_be_bytes());
        out.extend_from_slice(&self.return_code.to_be_bytes());
        out.extend_from_slice(&self.random_bytes_size.to_be_bytes());
        out.extend_from_slice(&self.random_bytes);
        Ok(out)
    }

    /// Parses a response. The embedded `random_bytes_size` is authoritative: a device
    /// may hand back fewer bytes than were requested and still report success.
    pub fn decode(raw: &[u8]) -> Result<Self, WireError> {
        if raw.len() < HEADER_LEN {
            return Err(WireError::Truncated {
                expected: HEADER_LEN,
                actual: raw.len(),
            });
        }
        let tag = be_u16(raw, OFF_TAG);
        if tag != TAG_RSP_COMMAND {
            return Err(invalid("tag", OFF_TAG, tag.into(), "0xc4"));
        }
        let param_size = be_u32(raw, OFF_PARAM_SIZE);
        if param_size as u64 != raw.len() as u64 {
            return Err(WireError::Framing {
                field: "param_size",
                offset: OFF_PARAM_SIZE,
                declared: param_size.into(),
                actual: raw.len() as u64,
            });
        }
        let return_code = be_u32(raw, OFF_RETURN_CODE);
        let random_bytes_size = be_u32(raw, OFF_COUNT);
        let payload = &raw[HEADER_LEN..];
        if random_bytes_size as u64 != payload.len() as u64 {
            return Err(WireError::Framing {
                field: "random_bytes_size",
                offset: OFF_COUNT,
                declared: random_bytes_size.into(),
                actual: payload.len() as u64,
            });
        }
        let resp = Self {
            tag,
            param_size,
            return_code,
            random_bytes_size,
            random_bytes: payload.to_vec(),
        };
        resp.validate()?;
        Ok(resp)
    }
}

pub fn encode_request(req: &GetRandomRequest) -> Result<[u8; HEADER_LEN], WireError> {
    req.encode()
}

pub fn decode_request(raw: &[u8]) -> Result<GetRandomRequest, WireError> {
    GetRandomRequest::decode(raw)
}

pub fn encode_response(resp: &GetRandomResponse) -> Result<Vec<u8>, WireError> {
    resp.encode()
}

pub fn decode_response(raw: &[u8]) -> Result<GetRandomResponse, WireError> {
    GetRandomResponse::decode(raw)
}

fn invalid(field: &'static str, offset: usize, found: u64, expected: &'static str) -> WireError {
    WireError::InvalidField {
        field,
        offset,
        found,
        expected,
    }
}

fn be_u16(raw: &[u8], off: usize) -> u16 {
    u16::from_be_bytes([raw[off], raw[off + 1]])
}

fn be_u32(raw: &[u8], off: usize) -> u32 {
    u32::from_be_bytes([raw[off], raw[off + 1], raw[off + 2], raw[off + 3]])
}
