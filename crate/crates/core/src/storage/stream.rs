use super::io::{IoContext, TrackedFile};
use crate::error::{Error, Result};

const CHUNK: usize = 64 * 1024;

/// How the head arrives at the first page of a sequential stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamStart {
    /// Fresh stream: the first page counts as sequential.
    Fresh,
    /// The head seeks here from elsewhere: the first page counts as random.
    Seek,
}

/// Forward-only reader over a tracked file.
///
/// Each page is accounted once, when the stream first enters it, the way a
/// read-ahead buffer would fetch it.
///
/// The reader does not hold the [`IoContext`]; every read borrows it, so
/// the caller can interleave other tracked I/O (e.g. writes) with the scan.
pub struct SequentialReader<'a> {
    file: &'a TrackedFile,
    pos: u64,
    next_page: u64,
    buf: Vec<u8>,
    buf_start: u64,
}

impl<'a> SequentialReader<'a> {
    pub fn new(ctx: &mut IoContext, file: &'a TrackedFile, start: u64, how: StreamStart) -> Self {
        match how {
            StreamStart::Fresh => ctx.reset_cursor(file),
            StreamStart::Seek => ctx.detach_cursor(file),
        }
        SequentialReader {
            file,
            pos: start,
            next_page: 0,
            buf: Vec::new(),
            buf_start: start,
        }
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        self.file.len().saturating_sub(self.pos)
    }

    pub fn read_exact(&mut self, ctx: &mut IoContext, out: &mut [u8]) -> Result<()> {
        if out.is_empty() {
            return Ok(());
        }
        let len = out.len() as u64;
        if len > self.remaining() {
            return Err(Error::ShortRead {
                offset: self.pos,
                wanted: len,
                available: self.remaining(),
            });
        }
        let (first, last) = ctx.page_span(self.file, self.pos, len)?;
        let from = first.max(self.next_page);
        if from <= last {
            ctx.account_stream_pages(self.file, from, last);
            self.next_page = last + 1;
        }
        let mut filled = 0usize;
        while filled < out.len() {
            let buf_end = self.buf_start + self.buf.len() as u64;
            if self.pos < self.buf_start || self.pos >= buf_end {
                let want = (CHUNK as u64).min(self.remaining()) as usize;
                self.buf.resize(want, 0);
                self.file.read_exact_at(&mut self.buf, self.pos)?;
                self.buf_start = self.pos;
            }
            let at = (self.pos - self.buf_start) as usize;
            let n = (self.buf.len() - at).min(out.len() - filled);
            out[filled..filled + n].copy_from_slice(&self.buf[at..at + n]);
            filled += n;
            self.pos += n as u64;
        }
        Ok(())
    }
}
