//! Binary layouts of the per-story pose log and spatial relation records.
//! Both are little-endian and start with the same kind of header and entity
//! table.

use std::io::{self, Write};

use gest_core::collectors::{Compass, SpatialRelationRecord};
use gest_core::model::{EntityId, EntityKind, Vec3};
use gest_core::sim::{EntityInfo, FrameLog, Pose};
use thiserror::Error;

pub const RELATIONS_MAGIC: &[u8; 4] = b"GTSR";
pub const FRAMELOG_MAGIC: &[u8; 4] = b"GTFL";
pub const FORMAT_VERSION: u16 = 1;
pub const RECORD_SIZE: usize = 22;
pub const FLAG_COINCIDENT: u8 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic, expected {0:?}")]
    Magic(&'static str),
    #[error("unsupported format version {0}")]
    Version(u16),
    #[error("truncated file")]
    Truncated,
    #[error("invalid entity table: {0}")]
    Entity(String),
    #[error("{0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawRecord {
    pub frame: u32,
    pub a: u16,
    pub b: u16,
    pub distance_m: f32,
    pub azimuth_deg: f32,
    pub elevation_deg: f32,
    pub compass: u8,
    pub flags: u8,
}

impl RawRecord {
    pub fn from_record(r: &SpatialRelationRecord) -> Self {
        RawRecord {
            frame: r.frame,
            a: r.a.0 as u16,
            b: r.b.0 as u16,
            distance_m: r.relation.distance_m as f32,
            azimuth_deg: r.relation.azimuth_deg as f32,
            elevation_deg: r.relation.elevation_deg as f32,
            compass: r.relation.compass.index(),
            flags: if r.relation.coincident { FLAG_COINCIDENT } else { 0 },
        }
    }

    pub fn compass(&self) -> Option<Compass> {
        Compass::from_index(self.compass)
    }

    pub fn coincident(&self) -> bool {
        self.flags & FLAG_COINCIDENT != 0
    }

    pub fn encode(&self, out: &mut [u8; RECORD_SIZE]) {
        out[0..4].copy_from_slice(&self.frame.to_le_bytes());
        out[4..6].copy_from_slice(&self.a.to_le_bytes());
        out[6..8].copy_from_slice(&self.b.to_le_bytes());
        out[8..12].copy_from_slice(&self.distance_m.to_le_bytes());
        out[12..16].copy_from_slice(&self.azimuth_deg.to_le_bytes());
        out[16..20].copy_from_slice(&self.elevation_deg.to_le_bytes());
        out[20] = self.compass;
        out[21] = self.flags;
    }

    pub fn decode(b: &[u8]) -> Self {
        let u32_at = |i: usize| u32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        let f32_at = |i: usize| f32::from_le_bytes(b[i..i + 4].try_into().unwrap());
        RawRecord {
            frame: u32_at(0),
            a: u16::from_le_bytes([b[4], b[5]]),
            b: u16::from_le_bytes([b[6], b[7]]),
            distance_m: f32_at(8),
            azimuth_deg: f32_at(12),
            elevation_deg: f32_at(16),
            compass: b[20],
            flags: b[21],
        }
    }
}

fn write_header<W: Write>(w: &mut W, magic: &[u8; 4], fps: u32, entities: &[EntityInfo]) -> io::Result<()> {
    w.write_all(magic)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(fps as u16).to_le_bytes())?;
    w.write_all(&(entities.len() as u16).to_le_bytes())?;
    w.write_all(&0u16.to_le_bytes())?;
    for e in entities {
        let name = truncate_name(&e.name);
        w.write_all(&(e.id.0 as u16).to_le_bytes())?;
        w.write_all(&[e.kind.code(), name.len() as u8])?;
        w.write_all(name.as_bytes())?;
    }
    Ok(())
}

/// Longest prefix of `name` that fits in 255 bytes on a char boundary.
fn truncate_name(name: &str) -> &str {
    let mut end = name.len().min(255);
    while !name.is_char_boundary(end) {
        end -= 1;
    }
    &name[..end]
}

struct Header {
    fps: u32,
    entities: Vec<EntityInfo>,
    body: usize,
}

fn read_header(bytes: &[u8], magic: &'static [u8; 4], name: &'static str) -> Result<Header, FormatError> {
    if bytes.len() < 12 {
        return Err(FormatError::Truncated);
    }
    if &bytes[0..4] != magic {
        return Err(FormatError::Magic(name));
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let version = u16_at(4);
    if version != FORMAT_VERSION {
        return Err(FormatError::Version(version));
    }
    let fps = u16_at(6) as u32;
    let count = u16_at(8) as usize;
    let mut pos = 12;
    let mut entities = Vec::with_capacity(count);
    for _ in 0..count {
        if bytes.len() < pos + 4 {
            return Err(FormatError::Truncated);
        }
        let id = u16_at(pos);
        let kind = EntityKind::from_code(bytes[pos + 2]).ok_or_else(|| FormatError::Entity(format!("kind {}", bytes[pos + 2])))?;
        let len = bytes[pos + 3] as usize;
        let name = bytes.get(pos + 4..pos + 4 + len).ok_or(FormatError::Truncated)?;
        let name = String::from_utf8(name.to_vec()).map_err(|e| FormatError::Entity(e.to_string()))?;
        entities.push(EntityInfo { id: EntityId(id as u32), kind, name });
        pos += 4 + len;
    }
    Ok(Header { fps, entities, body: pos })
}

/// Writes a relations file and returns the number of records written.
pub fn write_relations<W: Write, I: IntoIterator<Item = SpatialRelationRecord>>(
    w: &mut W,
    fps: u32,
    entities: &[EntityInfo],
    records: I,
) -> io::Result<u64> {
    write_header(w, RELATIONS_MAGIC, fps, entities)?;
    let mut buf = [0u8; RECORD_SIZE];
    let mut n = 0;
    for r in records {
        RawRecord::from_record(&r).encode(&mut buf);
        w.write_all(&buf)?;
        n += 1;
    }
    Ok(n)
}

/// A parsed relations file with random access to its records.
pub struct RelationsView<'a> {
    pub fps: u32,
    pub entities: Vec<EntityInfo>,
    records: &'a [u8],
}

impl<'a> RelationsView<'a> {
    pub fn parse(bytes: &'a [u8]) -> Result<Self, FormatError> {
        let h = read_header(bytes, RELATIONS_MAGIC, "GTSR")?;
        let records = &bytes[h.body..];
        if records.len() % RECORD_SIZE != 0 {
            return Err(FormatError::Truncated);
        }
        Ok(Self { fps: h.fps, entities: h.entities, records })
    }

    pub fn len(&self) -> usize {
        self.records.len() / RECORD_SIZE
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&self, i: usize) -> RawRecord {
        RawRecord::decode(&self.records[i * RECORD_SIZE..(i + 1) * RECORD_SIZE])
    }

    pub fn iter(&self) -> impl Iterator<Item = RawRecord> + '_ {
        self.records.chunks_exact(RECORD_SIZE).map(RawRecord::decode)
    }
}

/// Pose log layout: header, entity table, frame count u32, then per frame
/// and entity x, y, z, yaw as f64.
pub fn write_framelog<W: Write>(w: &mut W, log: &FrameLog) -> io::Result<()> {
    write_header(w, FRAMELOG_MAGIC, log.fps, &log.entities)?;
    w.write_all(&(log.frame_count() as u32).to_le_bytes())?;
    for p in log.poses() {
        for v in [p.position.x, p.position.y, p.position.z, p.yaw_deg] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_framelog(bytes: &[u8]) -> Result<FrameLog, FormatError> {
    let h = read_header(bytes, FRAMELOG_MAGIC, "GTFL")?;
    let body = &bytes[h.body..];
    if body.len() < 4 {
        return Err(FormatError::Truncated);
    }
    let frames = u32::from_le_bytes(body[0..4].try_into().unwrap()) as usize;
    let data = &body[4..];
    if data.len() != frames * h.entities.len() * 32 {
        return Err(FormatError::Truncated);
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().unwrap());
    let poses = data
        .chunks_exact(32)
        .map(|c| Pose { position: Vec3::new(f(&c[0..8]), f(&c[8..16]), f(&c[16..24])), yaw_deg: f(&c[24..32]) })
        .collect();
    Ok(FrameLog::from_poses(h.fps, h.entities, poses))
}
