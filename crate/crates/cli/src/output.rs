use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, Result};

/// A CSV record with a fixed column order.
pub trait Row: Serialize {
    const HEADER: &'static [&'static str];
}

/// Declares a row struct whose header is its field names in order.
macro_rules! csv_row {
    ($(#[$meta:meta])* $name:ident { $($field:ident : $ty:ty),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, serde::Serialize)]
        pub struct $name {
            $(pub $field: $ty),*
        }

        impl $crate::output::Row for $name {
            const HEADER: &'static [&'static str] = &[$(stringify!($field)),*];
        }
    };
}
pub(crate) use csv_row;

/// Header line first, then one record per row, LF terminated.
pub fn write_rows<R: Row, W: Write>(rows: &[R], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(R::HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_results<R: Row>(rows: &[R], path: &Path) -> Result<()> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io)?;
    let mut buf = BufWriter::new(file);
    write_rows(rows, &mut buf)?;
    buf.flush().map_err(io)
}

pub fn to_csv_string<R: Row>(rows: &[R]) -> Result<String> {
    let mut bytes = Vec::new();
    write_rows(rows, &mut bytes)?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Pair {
        a: u32,
        b: f64,
    }

    impl Row for Pair {
        const HEADER: &'static [&'static str] = &["a", "b"];
    }

    #[test]
    fn empty_rows_give_header_only() {
        assert_eq!(to_csv_string::<Pair>(&[]).unwrap(), "a,b\n");
    }

    #[test]
    fn two_rows_give_three_lines() {
        let s = to_csv_string(&[Pair { a: 1, b: 0.5 }, Pair { a: 2, b: -1.25 }]).unwrap();
        assert_eq!(s, "a,b\n1,0.5\n2,-1.25\n");
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let err = write_results::<Pair>(&[], Path::new("/nonexistent/dir/out.csv")).unwrap_err();
        assert!(matches!(err, CliError::Io { .. }));
    }
}
