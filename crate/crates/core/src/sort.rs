//! Sorting and merging of like terms, in memory or through spill files.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::mem;

use tempfile::NamedTempFile;

use crate::codec;
use crate::error::EngineError;
use crate::settings::Settings;
use crate::term::{compare, Term};

/// Sorts normalized terms and merges like terms by adding coefficients.
/// Groups that sum to zero disappear.
pub fn sort_merge(terms: impl IntoIterator<Item = Term>) -> Vec<Term> {
    let mut terms: Vec<Term> = terms.into_iter().collect();
    terms.sort_by(compare);
    merge_sorted(terms)
}

fn merge_sorted(sorted: impl IntoIterator<Item = Term>) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::new();
    let mut acc = Accumulator::default();
    for t in sorted {
        acc.push(t, &mut out);
    }
    acc.flush(&mut out);
    out
}

#[derive(Default)]
struct Accumulator {
    current: Option<Term>,
}

impl Accumulator {
    fn push(&mut self, t: Term, out: &mut Vec<Term>) {
        match &mut self.current {
            Some(cur) if compare(cur, &t) == Ordering::Equal => {
                cur.coeff = &cur.coeff + &t.coeff;
            }
            _ => {
                self.flush(out);
                self.current = Some(t);
            }
        }
    }

    fn flush(&mut self, out: &mut Vec<Term>) {
        if let Some(t) = self.current.take() {
            if !t.coeff.is_zero() {
                out.push(t);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SpillStats {
    pub runs_written: usize,
    pub bytes_spilled: usize,
}

/// Streaming sorter. Terms are buffered until their encoded size exceeds
/// `SmallSize`; each full buffer is sorted, merged and written as a run under
/// `TempDir`. `finish` k-way merges all runs. Run files are removed when the
/// sorter is dropped, on success and on error alike.
pub struct Sorter<'a> {
    settings: &'a Settings,
    buffer: Vec<Term>,
    buffer_bytes: usize,
    runs: Vec<NamedTempFile>,
    stats: SpillStats,
}

impl<'a> Sorter<'a> {
    pub fn new(settings: &'a Settings) -> Self {
        Sorter {
            settings,
            buffer: Vec::new(),
            buffer_bytes: 0,
            runs: Vec::new(),
            stats: SpillStats::default(),
        }
    }

    pub fn push(&mut self, t: Term) -> Result<(), EngineError> {
        let size = codec::encoded_len(&t);
        if size > self.settings.max_term_size {
            return Err(EngineError::TermTooLarge {
                size,
                max: self.settings.max_term_size,
            });
        }
        self.buffer.push(t);
        self.buffer_bytes += size;
        if self.buffer_bytes > self.settings.small_size {
            self.spill()?;
        }
        Ok(())
    }

    fn spill(&mut self) -> Result<(), EngineError> {
        let run = sort_merge(mem::take(&mut self.buffer));
        self.buffer_bytes = 0;
        let dir = &self.settings.temp_dir;
        let tmp = tempfile::Builder::new()
            .prefix(&format!("miniform-{}-", std::process::id()))
            .suffix(".run")
            .tempfile_in(dir)
            .map_err(|source| EngineError::TempDir {
                path: dir.clone(),
                source,
            })?;
        let mut w = BufWriter::new(tmp.as_file());
        codec::write_header(&mut w)?;
        let mut payload = Vec::new();
        for t in &run {
            payload.clear();
            codec::encode_term(t, &mut payload);
            self.stats.bytes_spilled += codec::write_record(&mut w, &payload)?;
        }
        w.flush()?;
        drop(w);
        self.runs.push(tmp);
        self.stats.runs_written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(Vec<Term>, SpillStats), EngineError> {
        if self.runs.is_empty() {
            let out = sort_merge(mem::take(&mut self.buffer));
            return Ok((out, self.stats));
        }
        let mut sources: Vec<RunSource> = Vec::with_capacity(self.runs.len() + 1);
        for run in &self.runs {
            let mut r = BufReader::new(run.reopen()?);
            codec::read_header(&mut r)?;
            sources.push(RunSource::File(r));
        }
        let tail = sort_merge(mem::take(&mut self.buffer));
        sources.push(RunSource::Memory(tail.into_iter()));

        let mut heap = BinaryHeap::new();
        for (idx, src) in sources.iter_mut().enumerate() {
            if let Some(term) = src.next_term()? {
                heap.push(HeapEntry { term, source: idx });
            }
        }
        let mut out = Vec::new();
        let mut acc = Accumulator::default();
        while let Some(HeapEntry { term, source }) = heap.pop() {
            if let Some(next) = sources[source].next_term()? {
                heap.push(HeapEntry { term: next, source });
            }
            acc.push(term, &mut out);
        }
        acc.flush(&mut out);
        Ok((out, self.stats))
    }
}

enum RunSource {
    File(BufReader<File>),
    Memory(std::vec::IntoIter<Term>),
}

impl RunSource {
    fn next_term(&mut self) -> Result<Option<Term>, EngineError> {
        match self {
            RunSource::File(r) => codec::read_record(r),
            RunSource::Memory(it) => Ok(it.next()),
        }
    }
}

struct HeapEntry {
    term: Term,
    source: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // reversed: BinaryHeap pops the greatest, we want the smallest term first
    fn cmp(&self, other: &Self) -> Ordering {
        compare(&other.term, &self.term).then_with(|| other.source.cmp(&self.source))
    }
}

/// Sorts a whole stream through a [`Sorter`].
pub fn spill_sort(
    terms: impl IntoIterator<Item = Term>,
    settings: &Settings,
) -> Result<(Vec<Term>, SpillStats), EngineError> {
    let mut sorter = Sorter::new(settings);
    for t in terms {
        sorter.push(t)?;
    }
    sorter.finish()
}
