use std::collections::HashMap;
use std::fs::File;
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};

use super::cache::{CacheOutcome, PageCache};
use super::IoStats;
use crate::error::{invalid, Error, Result};

pub const DEFAULT_PAGE_SIZE: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FileId(pub u32);

/// A page of one tracked file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PageKey {
    pub file: FileId,
    pub page: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Sequential,
    Random,
}

/// Sequential iff `page` directly follows `previous`, or the stream has
/// just started.
pub fn classify_access(previous: Option<u64>, page: u64) -> AccessKind {
    match previous {
        None => AccessKind::Sequential,
        Some(p) if p.checked_add(1) == Some(page) => AccessKind::Sequential,
        Some(_) => AccessKind::Random,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cursor {
    /// Stream start: the next page counts as sequential.
    Start,
    /// The head was moved elsewhere: the next page counts as random.
    Detached,
    At(u64),
}

/// A file opened through an [`IoContext`].
///
/// Page numbers are counted from `page_origin`. Dataset files put the
/// origin after the fixed header, which is read once when the file is
/// opened and never goes through the simulated cache.
#[derive(Debug)]
pub struct TrackedFile {
    id: FileId,
    file: File,
    len: u64,
    page_origin: u64,
    path: PathBuf,
}

impl TrackedFile {
    pub fn id(&self) -> FileId {
        self.id
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn page_origin(&self) -> u64 {
        self.page_origin
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Untracked positioned read of the exact range.
    pub fn read_exact_at(&self, buf: &mut [u8], offset: u64) -> Result<()> {
        let end = offset.checked_add(buf.len() as u64);
        if end.is_none_or(|e| e > self.len) {
            return Err(Error::ShortRead {
                offset,
                wanted: buf.len() as u64,
                available: self.len.saturating_sub(offset),
            });
        }
        self.file.read_exact_at(buf, offset)?;
        Ok(())
    }

    pub(crate) fn write_all_at(&mut self, buf: &[u8], offset: u64) -> Result<()> {
        self.file.write_all_at(buf, offset)?;
        self.len = self.len.max(offset + buf.len() as u64);
        Ok(())
    }

    pub(crate) fn sync(&self) -> Result<()> {
        self.file.sync_data()?;
        Ok(())
    }
}

/// One run's simulated memory and I/O accounting: a bounded LRU page
/// cache, per-file sequential cursors and cumulative [`IoStats`].
#[derive(Debug)]
pub struct IoContext {
    page_size: u64,
    cache: PageCache<PageKey>,
    stats: IoStats,
    cursors: HashMap<FileId, Cursor>,
    /// Pages touched in the current epoch and how often each was loaded.
    epoch_loads: HashMap<PageKey, u32>,
    next_id: u32,
}

impl IoContext {
    pub fn new(page_size: u64, cache_pages: usize) -> Result<Self> {
        if page_size == 0 || !page_size.is_power_of_two() {
            return Err(invalid(format!(
                "page size {page_size} is not a power of two"
            )));
        }
        if cache_pages == 0 {
            return Err(invalid("page cache needs at least one page"));
        }
        Ok(IoContext {
            page_size,
            cache: PageCache::new(cache_pages),
            stats: IoStats::default(),
            cursors: HashMap::new(),
            epoch_loads: HashMap::new(),
            next_id: 0,
        })
    }

    pub fn page_size(&self) -> u64 {
        self.page_size
    }

    pub fn cache(&self) -> &PageCache<PageKey> {
        &self.cache
    }

    pub fn stats(&self) -> IoStats {
        self.stats
    }

    fn register(&mut self, file: File, path: &Path, page_origin: u64) -> Result<TrackedFile> {
        let len = file.metadata()?.len();
        let id = FileId(self.next_id);
        self.next_id += 1;
        self.cursors.insert(id, Cursor::Start);
        Ok(TrackedFile {
            id,
            file,
            len,
            page_origin,
            path: path.to_path_buf(),
        })
    }

    pub fn open(&mut self, path: &Path, page_origin: u64) -> Result<TrackedFile> {
        let file = File::open(path)?;
        self.register(file, path, page_origin)
    }

    /// Create (truncate) a file for tracked writes.
    pub fn create(&mut self, path: &Path) -> Result<TrackedFile> {
        let file = std::fs::OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(true)
            .open(path)?;
        self.register(file, path, 0)
    }

    /// Start a new epoch: forget which pages were touched, keep the cache.
    pub fn begin_epoch(&mut self) {
        self.epoch_loads.clear();
    }

    /// Mark the next access to `file` as the start of a fresh stream.
    pub fn reset_cursor(&mut self, file: &TrackedFile) {
        self.cursors.insert(file.id, Cursor::Start);
    }

    /// Mark the head as having moved away from `file`.
    pub fn detach_cursor(&mut self, file: &TrackedFile) {
        self.cursors.insert(file.id, Cursor::Detached);
    }

    /// Most loads of a single page in the current epoch.
    pub fn max_page_loads_this_epoch(&self) -> u32 {
        self.epoch_loads.values().copied().max().unwrap_or(0)
    }

    pub fn page_loads_this_epoch(&self, key: &PageKey) -> u32 {
        self.epoch_loads.get(key).copied().unwrap_or(0)
    }

    /// Page range `[first, last]` covered by `len > 0` bytes at `offset`.
    pub fn page_span(&self, file: &TrackedFile, offset: u64, len: u64) -> Result<(u64, u64)> {
        if offset < file.page_origin {
            return Err(invalid(format!(
                "offset {offset} falls inside the {}-byte file header",
                file.page_origin
            )));
        }
        let rel = offset - file.page_origin;
        Ok((
            rel / self.page_size,
            (rel + len.max(1) - 1) / self.page_size,
        ))
    }

    fn touch_page(&mut self, file: FileId, page: u64) {
        let key = PageKey { file, page };
        let previous = match self.cursors.get(&file).copied().unwrap_or(Cursor::Start) {
            Cursor::Start => None,
            Cursor::Detached => Some(u64::MAX),
            Cursor::At(p) => Some(p),
        };
        let kind = classify_access(previous, page);
        self.cursors.insert(file, Cursor::At(page));
        let seen_this_epoch = self.epoch_loads.contains_key(&key);
        let loads = self.epoch_loads.entry(key).or_insert(0);
        match self.cache.access(key) {
            CacheOutcome::Hit => self.stats.page_cache_hits += 1,
            CacheOutcome::Miss { .. } => {
                match kind {
                    AccessKind::Sequential => self.stats.pages_read_seq += 1,
                    AccessKind::Random => self.stats.pages_read_rand += 1,
                }
                if seen_this_epoch {
                    self.stats.redundant_page_loads += 1;
                }
                *loads += 1;
            }
        }
        debug_assert!(self.cache.len() <= self.cache.capacity());
    }

    /// Account one read call covering `[offset, offset + len)` page by page.
    pub fn account_read(&mut self, file: &TrackedFile, offset: u64, len: u64) -> Result<()> {
        let (first, last) = self.page_span(file, offset, len)?;
        self.stats.read_calls += 1;
        for page in first..=last {
            self.touch_page(file.id, page);
        }
        Ok(())
    }

    /// Account a read-ahead fetch of pages `[first, last]`.
    pub(crate) fn account_stream_pages(&mut self, file: &TrackedFile, first: u64, last: u64) {
        self.stats.read_calls += 1;
        for page in first..=last {
            self.touch_page(file.id, page);
        }
    }

    /// Read `len` bytes at `offset`: one read call, every covered page
    /// goes through the cache.
    pub fn positioned_read(
        &mut self,
        file: &TrackedFile,
        offset: u64,
        len: u64,
    ) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; len as usize];
        self.read_into(file, offset, &mut buf)?;
        Ok(buf)
    }

    pub fn read_into(&mut self, file: &TrackedFile, offset: u64, buf: &mut [u8]) -> Result<()> {
        file.read_exact_at(buf, offset)?;
        self.account_read(file, offset, buf.len() as u64)
    }

    /// Append-style write: every covered page counts as one write of `kind`.
    pub fn write_at(
        &mut self,
        file: &mut TrackedFile,
        offset: u64,
        data: &[u8],
        kind: AccessKind,
    ) -> Result<()> {
        file.write_all_at(data, offset)?;
        if data.is_empty() {
            return Ok(());
        }
        let (first, last) = self.page_span(file, offset, data.len() as u64)?;
        let pages = last - first + 1;
        match kind {
            AccessKind::Sequential => self.stats.pages_written_seq += pages,
            AccessKind::Random => self.stats.pages_written_rand += pages,
        }
        Ok(())
    }
}
