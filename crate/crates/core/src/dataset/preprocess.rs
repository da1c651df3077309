use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::pcap::Packet;
use super::PreparedSample;

pub const PACKET_INPUT_LENGTH: usize = 1500;
const ETHERNET_HEADER_LEN: usize = 14;
const IPV4_MIN_HEADER_LEN: usize = 20;
/// Source and destination addresses within the IPv4 header.
const IPV4_ADDRESS_BYTES: std::ops::Range<usize> = 12..20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    Vlan,
    Ipv6,
    Arp,
    OtherEtherType,
}

impl SkipReason {
    fn from_ether_type(ether_type: u16) -> Self {
        match ether_type {
            0x8100 | 0x88a8 => Self::Vlan,
            0x86dd => Self::Ipv6,
            0x0806 => Self::Arp,
            _ => Self::OtherEtherType,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Self::Vlan => "vlan",
            Self::Ipv6 => "ipv6",
            Self::Arp => "arp",
            Self::OtherEtherType => "other_ethertype",
        }
    }
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PacketError {
    #[error("frame skipped ({reason}, ethertype 0x{ether_type:04x})")]
    Skipped { reason: SkipReason, ether_type: u16 },
    #[error("malformed frame of {len} bytes")]
    Malformed { len: usize },
}

/// Ethernet frame to classifier input: strip the Ethernet header, zero the
/// IPv4 source/destination addresses, cut or zero-pad to `input_length`
/// bytes and scale each byte by 1/255.
pub fn preprocess_frame(frame: &[u8], input_length: usize) -> Result<Vec<f64>, PacketError> {
    if frame.len() < ETHERNET_HEADER_LEN {
        return Err(PacketError::Malformed { len: frame.len() });
    }
    let ether_type = u16::from_be_bytes([frame[12], frame[13]]);
    if ether_type != 0x0800 {
        return Err(PacketError::Skipped { reason: SkipReason::from_ether_type(ether_type), ether_type });
    }
    if frame.len() < ETHERNET_HEADER_LEN + IPV4_MIN_HEADER_LEN {
        return Err(PacketError::Malformed { len: frame.len() });
    }
    let ip = &frame[ETHERNET_HEADER_LEN..];
    let mut out = vec![0.0; input_length];
    for (i, (dst, &byte)) in out.iter_mut().zip(ip).enumerate() {
        if !IPV4_ADDRESS_BYTES.contains(&i) {
            *dst = f64::from(byte) / 255.0;
        }
    }
    Ok(out)
}

pub fn preprocess_packet(packet: &Packet, sample_id: impl Into<String>) -> Result<PreparedSample, PacketError> {
    Ok(PreparedSample {
        sample_id: sample_id.into(),
        label: None,
        input: preprocess_frame(&packet.data, PACKET_INPUT_LENGTH)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ipv4_frame(len: usize) -> Vec<u8> {
        let mut f: Vec<u8> = (0..len).map(|i| (i % 251) as u8 + 1).collect();
        f[12] = 0x08;
        f[13] = 0x00;
        f
    }

    #[test]
    fn sixty_byte_frame() {
        let frame = ipv4_frame(60);
        let x = preprocess_frame(&frame, PACKET_INPUT_LENGTH).unwrap();
        assert_eq!(x.len(), 1500);
        for i in 0..46 {
            let expected = if (12..20).contains(&i) { 0.0 } else { f64::from(frame[14 + i]) / 255.0 };
            assert_eq!(x[i], expected);
        }
        assert!(x[46..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn long_frame_is_truncated() {
        let x = preprocess_frame(&ipv4_frame(1600), PACKET_INPUT_LENGTH).unwrap();
        assert_eq!(x.len(), 1500);
        assert_eq!(x[1499], f64::from(ipv4_frame(1600)[14 + 1499]) / 255.0);
    }

    #[test]
    fn masking_is_idempotent() {
        let mut frame = ipv4_frame(80);
        let once = preprocess_frame(&frame, 1500).unwrap();
        for b in &mut frame[26..34] {
            *b = 0;
        }
        assert_eq!(preprocess_frame(&frame, 1500).unwrap(), once);
    }

    #[test]
    fn skip_and_malformed() {
        let mut frame = ipv4_frame(60);
        frame[12] = 0x81;
        assert!(matches!(
            preprocess_frame(&frame, 1500),
            Err(PacketError::Skipped { reason: SkipReason::Vlan, ether_type: 0x8100 })
        ));
        frame[12] = 0x86;
        frame[13] = 0xdd;
        assert!(matches!(
            preprocess_frame(&frame, 1500),
            Err(PacketError::Skipped { reason: SkipReason::Ipv6, .. })
        ));
        assert_eq!(preprocess_frame(&ipv4_frame(33), 1500), Err(PacketError::Malformed { len: 33 }));
        assert_eq!(preprocess_frame(&[0; 5], 1500), Err(PacketError::Malformed { len: 5 }));
        assert!(preprocess_frame(&ipv4_frame(34), 1500).is_ok());
    }
}
