use super::{MidiError, NoteSequence};

/// A time span of a performance and the notes overlapping it.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    /// Indices into the parent sequence's notes.
    pub note_indices: Vec<usize>,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Span with the silent gaps inside it.
#[derive(Debug, Clone)]
struct Piece {
    start: f64,
    end: f64,
    gaps: Vec<(f64, f64)>,
}

impl Piece {
    fn len(&self) -> f64 {
        self.end - self.start
    }

    fn absorb(&mut self, next: Piece) {
        self.gaps.push((self.end, next.start));
        self.gaps.extend(next.gaps);
        self.end = next.end;
    }
}

/// Splits a performance into listening-test segments at long pauses.
///
/// Cuts are only placed where no note sounds for at least `min_pause`
/// seconds. Pieces shorter than `min_len` are merged into the following piece
/// (a trailing short piece joins the previous one). Pieces longer than
/// `max_len` are split at their longest internal pause, or at `max_len` when
/// they contain none, repeatedly until they fit.
pub fn segment_by_pauses(
    seq: &NoteSequence,
    min_pause: f64,
    (min_len, max_len): (f64, f64),
) -> Result<Vec<Segment>, MidiError> {
    if !(min_pause > 0.0) {
        return Err(MidiError::InvalidSegmentation("min_pause must be positive"));
    }
    if !(min_len < max_len) || !(max_len > 0.0) {
        return Err(MidiError::InvalidSegmentation("need min_len < max_len"));
    }

    // sounding islands separated by pauses of at least min_pause
    let mut islands: Vec<Piece> = Vec::new();
    for n in seq.notes() {
        match islands.last_mut() {
            Some(p) if n.onset - p.end < min_pause => p.end = p.end.max(n.offset),
            _ => islands.push(Piece { start: n.onset, end: n.offset, gaps: Vec::new() }),
        }
    }

    let mut merged: Vec<Piece> = Vec::new();
    let mut current: Option<Piece> = None;
    for island in islands {
        current = Some(match current.take() {
            None => island,
            Some(mut cur) if cur.len() < min_len => {
                cur.absorb(island);
                cur
            }
            Some(cur) => {
                merged.push(cur);
                island
            }
        });
    }
    if let Some(last) = current {
        match merged.last_mut() {
            Some(prev) if last.len() < min_len => prev.absorb(last),
            _ => merged.push(last),
        }
    }

    let mut spans = Vec::new();
    for piece in merged {
        split_long(piece, max_len, &mut spans);
    }

    Ok(spans
        .into_iter()
        .map(|(start, end)| Segment {
            start,
            end,
            note_indices: seq
                .notes()
                .iter()
                .enumerate()
                .filter(|(_, n)| n.onset < end && n.offset > start)
                .map(|(i, _)| i)
                .collect(),
        })
        .collect())
}

fn split_long(piece: Piece, max_len: f64, out: &mut Vec<(f64, f64)>) {
    if piece.len() <= max_len {
        out.push((piece.start, piece.end));
        return;
    }
    let longest = piece
        .gaps
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| (a.1 - a.0).total_cmp(&(b.1 - b.0)).then(ib.cmp(ia)))
        .map(|(i, _)| i);
    match longest {
        Some(i) => {
            let (gap_start, gap_end) = piece.gaps[i];
            let left = Piece { start: piece.start, end: gap_start, gaps: piece.gaps[..i].to_vec() };
            let right = Piece { start: gap_end, end: piece.end, gaps: piece.gaps[i + 1..].to_vec() };
            split_long(left, max_len, out);
            split_long(right, max_len, out);
        }
        None => {
            let cut = piece.start + max_len;
            out.push((piece.start, cut));
            split_long(Piece { start: cut, end: piece.end, gaps: Vec::new() }, max_len, out);
        }
    }
}
