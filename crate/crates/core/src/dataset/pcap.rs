//! Classic libpcap capture files.
//!
//! Layout: a 24-byte global header (magic, version, zone, sigfigs, snaplen,
//! link type) followed by records of a 16-byte header (seconds, sub-second
//! part, captured length, original length) and the captured bytes. The
//! magic's byte order decides the endianness of every later field.

use std::path::Path;

use crate::error::{Error, Result};

pub const PCAP_MAGIC: u32 = 0xa1b2_c3d4;
pub const PCAP_MAGIC_SWAPPED: u32 = 0xd4c3_b2a1;
const PCAPNG_BLOCK: u32 = 0x0a0d_0d0a;
pub const LINKTYPE_ETHERNET: u32 = 1;

const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PcapHeader {
    /// Fields are stored big-endian.
    pub big_endian: bool,
    pub version_major: u16,
    pub version_minor: u16,
    pub thiszone: i32,
    pub sigfigs: u32,
    pub snaplen: u32,
    pub link_type: u32,
}

impl PcapHeader {
    pub fn ethernet(big_endian: bool) -> Self {
        Self {
            big_endian,
            version_major: 2,
            version_minor: 4,
            thiszone: 0,
            sigfigs: 0,
            snaplen: 65535,
            link_type: LINKTYPE_ETHERNET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub ts_sec: u32,
    pub ts_usec: u32,
    pub orig_len: u32,
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PcapCapture {
    pub header: PcapHeader,
    pub packets: Vec<Packet>,
    /// Incomplete records found at the end of the stream (0 or 1).
    pub truncated_records: usize,
}

struct Reader<'a> {
    bytes: &'a [u8],
    big_endian: bool,
}

impl Reader<'_> {
    fn u32_at(&self, offset: usize) -> u32 {
        let b: [u8; 4] = self.bytes[offset..offset + 4].try_into().expect("4 bytes");
        if self.big_endian {
            u32::from_be_bytes(b)
        } else {
            u32::from_le_bytes(b)
        }
    }

    fn u16_at(&self, offset: usize) -> u16 {
        let b: [u8; 2] = self.bytes[offset..offset + 2].try_into().expect("2 bytes");
        if self.big_endian {
            u16::from_be_bytes(b)
        } else {
            u16::from_le_bytes(b)
        }
    }
}

pub fn parse_pcap(bytes: &[u8]) -> Result<PcapCapture> {
    if bytes.len() < 4 {
        return Err(Error::Malformed { offset: 0, reason: "stream shorter than the pcap magic".into() });
    }
    let magic = u32::from_le_bytes(bytes[..4].try_into().expect("4 bytes"));
    let big_endian = match magic {
        PCAP_MAGIC => false,
        PCAP_MAGIC_SWAPPED => true,
        PCAPNG_BLOCK => {
            return Err(Error::UnsupportedFormat("pcapng captures are not supported".into()))
        }
        other => return Err(Error::UnsupportedFormat(format!("unknown magic 0x{other:08x}"))),
    };
    if bytes.len() < GLOBAL_HEADER_LEN {
        return Err(Error::Malformed { offset: 4, reason: "truncated global header".into() });
    }
    let r = Reader { bytes, big_endian };
    let header = PcapHeader {
        big_endian,
        version_major: r.u16_at(4),
        version_minor: r.u16_at(6),
        thiszone: r.u32_at(8) as i32,
        sigfigs: r.u32_at(12),
        snaplen: r.u32_at(16),
        link_type: r.u32_at(20),
    };

    let mut packets = Vec::new();
    let mut truncated_records = 0;
    let mut offset = GLOBAL_HEADER_LEN;
    while offset < bytes.len() {
        if bytes.len() - offset < RECORD_HEADER_LEN {
            truncated_records += 1;
            break;
        }
        let incl_len = r.u32_at(offset + 8) as usize;
        let orig_len = r.u32_at(offset + 12);
        if incl_len > orig_len as usize {
            return Err(Error::Malformed {
                offset,
                reason: format!("captured length {incl_len} exceeds original length {orig_len}"),
            });
        }
        let start = offset + RECORD_HEADER_LEN;
        if bytes.len() - start < incl_len {
            truncated_records += 1;
            break;
        }
        packets.push(Packet {
            ts_sec: r.u32_at(offset),
            ts_usec: r.u32_at(offset + 4),
            orig_len,
            data: bytes[start..start + incl_len].to_vec(),
        });
        offset = start + incl_len;
    }
    Ok(PcapCapture { header, packets, truncated_records })
}

pub fn read_pcap_file(path: impl AsRef<Path>) -> Result<PcapCapture> {
    parse_pcap(&std::fs::read(path)?)
}

/// Serializes a capture in the header's byte order.
pub fn write_pcap(header: &PcapHeader, packets: &[Packet]) -> Vec<u8> {
    let u32b = |v: u32| if header.big_endian { v.to_be_bytes() } else { v.to_le_bytes() };
    let u16b = |v: u16| if header.big_endian { v.to_be_bytes() } else { v.to_le_bytes() };
    let mut out = Vec::with_capacity(
        GLOBAL_HEADER_LEN + packets.iter().map(|p| RECORD_HEADER_LEN + p.data.len()).sum::<usize>(),
    );
    out.extend(u32b(PCAP_MAGIC));
    out.extend(u16b(header.version_major));
    out.extend(u16b(header.version_minor));
    out.extend(u32b(header.thiszone as u32));
    out.extend(u32b(header.sigfigs));
    out.extend(u32b(header.snaplen));
    out.extend(u32b(header.link_type));
    for p in packets {
        out.extend(u32b(p.ts_sec));
        out.extend(u32b(p.ts_usec));
        out.extend(u32b(p.data.len() as u32));
        out.extend(u32b(p.orig_len));
        out.extend(&p.data);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Global header written out byte by byte, little-endian.
    const EMPTY_LE: [u8; 24] = [
        0xd4, 0xc3, 0xb2, 0xa1, 0x02, 0x00, 0x04, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
        0x00, 0xff, 0xff, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00,
    ];

    #[test]
    fn empty_capture() {
        let cap = parse_pcap(&EMPTY_LE).unwrap();
        assert!(cap.packets.is_empty());
        assert_eq!(cap.truncated_records, 0);
        assert_eq!(cap.header, PcapHeader::ethernet(false));
    }

    #[test]
    fn big_endian_magic_bytes() {
        let bytes = write_pcap(&PcapHeader::ethernet(true), &[]);
        assert_eq!(&bytes[..4], &[0xa1, 0xb2, 0xc3, 0xd4]);
        assert!(parse_pcap(&bytes).unwrap().header.big_endian);
    }

    #[test]
    fn rejects_pcapng_and_garbage() {
        let ng = [0x0a, 0x0d, 0x0d, 0x0a, 0, 0, 0, 0];
        assert!(matches!(parse_pcap(&ng), Err(Error::UnsupportedFormat(m)) if m.contains("pcapng")));
        assert!(matches!(parse_pcap(b"GIF89a......"), Err(Error::UnsupportedFormat(_))));
        assert!(matches!(parse_pcap(&EMPTY_LE[..10]), Err(Error::Malformed { .. })));
    }

    #[test]
    fn truncated_tail_stops_parsing() {
        let packet = Packet { ts_sec: 1, ts_usec: 2, orig_len: 10, data: vec![7; 10] };
        let mut bytes = write_pcap(&PcapHeader::ethernet(false), &[packet.clone(), packet.clone()]);
        bytes.truncate(bytes.len() - 3);
        let cap = parse_pcap(&bytes).unwrap();
        assert_eq!(cap.packets, vec![packet]);
        assert_eq!(cap.truncated_records, 1);

        bytes.truncate(24 + 16 + 10 + 5);
        let cap = parse_pcap(&bytes).unwrap();
        assert_eq!(cap.packets.len(), 1);
        assert_eq!(cap.truncated_records, 1);
    }

    #[test]
    fn captured_longer_than_original_is_malformed() {
        let packet = Packet { ts_sec: 0, ts_usec: 0, orig_len: 4, data: vec![0; 8] };
        let bytes = write_pcap(&PcapHeader::ethernet(false), &[packet]);
        assert!(matches!(parse_pcap(&bytes), Err(Error::Malformed { offset: 24, .. })));
    }
}
