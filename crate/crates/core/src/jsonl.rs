//! Line-delimited JSON helpers.

use std::io::{self, Write};

use serde::Serialize;

pub fn write_record<W: Write, T: Serialize>(mut writer: W, record: &T) -> io::Result<()> {
    serde_json::to_writer(&mut writer, record)?;
    writer.write_all(b"\n")
}

pub fn write_records<'a, W, T, I>(mut writer: W, records: I) -> io::Result<()>
where
    W: Write,
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    for record in records {
        write_record(&mut writer, record)?;
    }
    writer.flush()
}

/// Serializes records into an in-memory JSONL buffer.
pub fn to_bytes<'a, T, I>(records: I) -> Vec<u8>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let mut buf = Vec::new();
    write_records(&mut buf, records).expect("writing to Vec cannot fail");
    buf
}
