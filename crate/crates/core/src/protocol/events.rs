//! Event stream wire format: a 4-byte big-endian length followed by that
//! many bytes of UTF-8 JSON holding an [`EventEnvelope`].

use std::io::{self, Read};

use serde::{Deserialize, Serialize};

/// Frames above this size are refused by [`read_frame`].
pub const MAX_FRAME_BYTES: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topic {
    Measurement,
    Reconfiguration,
    Analysis,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEnvelope {
    pub topic: Topic,
    pub seq: u64,
    pub body: serde_json::Value,
}

pub fn encode_frame(envelope: &EventEnvelope) -> Vec<u8> {
    let body = serde_json::to_vec(envelope).expect("envelope serializes");
    let mut frame = Vec::with_capacity(body.len() + 4);
    frame.extend_from_slice(&(body.len() as u32).to_be_bytes());
    frame.extend_from_slice(&body);
    frame
}

/// Reads one frame. `Ok(None)` on a clean end of stream before a header.
pub fn read_frame<R: Read>(reader: &mut R) -> io::Result<Option<EventEnvelope>> {
    let mut header = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match reader.read(&mut header[filled..])? {
            0 if filled == 0 => return Ok(None),
            0 => return Err(io::ErrorKind::UnexpectedEof.into()),
            n => filled += n,
        }
    }
    let len = u32::from_be_bytes(header) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame of {len} bytes")));
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body)?;
    serde_json::from_slice(&body)
        .map(Some)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_layout() {
        let env = EventEnvelope { topic: Topic::Failure, seq: 7, body: serde_json::json!({"x": 1}) };
        let frame = encode_frame(&env);
        let json = br#"{"topic":"failure","seq":7,"body":{"x":1}}"#;
        assert_eq!(&frame[..4], &(json.len() as u32).to_be_bytes());
        assert_eq!(&frame[4..], json);
    }

    #[test]
    fn reads_back_frames_then_eof() {
        let a = EventEnvelope { topic: Topic::Measurement, seq: 1, body: serde_json::json!({"v": 20.25}) };
        let b = EventEnvelope { topic: Topic::Analysis, seq: 2, body: serde_json::Value::Null };
        let mut bytes = encode_frame(&a);
        bytes.extend(encode_frame(&b));
        let mut cursor = io::Cursor::new(bytes);
        assert_eq!(read_frame(&mut cursor).unwrap(), Some(a));
        assert_eq!(read_frame(&mut cursor).unwrap(), Some(b));
        assert_eq!(read_frame(&mut cursor).unwrap(), None);
    }

    #[test]
    fn truncated_frame_is_an_error() {
        let env = EventEnvelope { topic: Topic::Measurement, seq: 1, body: serde_json::json!([1, 2, 3]) };
        let mut bytes = encode_frame(&env);
        bytes.truncate(bytes.len() - 2);
        assert!(read_frame(&mut io::Cursor::new(bytes)).is_err());
        assert!(read_frame(&mut io::Cursor::new(vec![0u8, 0])).is_err());
    }

    #[test]
    fn oversized_header_refused() {
        let bytes = (MAX_FRAME_BYTES as u32 + 1).to_be_bytes().to_vec();
        assert!(read_frame(&mut io::Cursor::new(bytes)).is_err());
    }
}
