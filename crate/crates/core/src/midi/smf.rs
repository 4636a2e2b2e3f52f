//! Standard MIDI File (formats 0 and 1) reading, plus a small format-0 writer.

use super::{MidiError, NoteEvent, NoteSequence};

const DEFAULT_US_PER_QUARTER: u32 = 500_000;
const SUSTAIN_CONTROLLER: u8 = 64;

#[derive(Debug, Clone, Copy)]
enum Event {
    NoteOn { channel: u8, key: u8, velocity: u8 },
    NoteOff { channel: u8, key: u8 },
    Sustain { channel: u8, down: bool },
    Tempo(u32),
}

struct Track {
    events: Vec<(u64, Event)>,
    end_tick: u64,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn u8(&mut self) -> Option<u8> {
        let b = *self.bytes.get(self.pos)?;
        self.pos += 1;
        Some(b)
    }

    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.remaining() < n {
            return None;
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    /// Variable-length quantity, at most four bytes.
    fn varlen(&mut self) -> Option<u32> {
        let mut value = 0u32;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | u32::from(b & 0x7f);
            if b & 0x80 == 0 {
                return Some(value);
            }
        }
        None
    }
}

/// Parses an SMF byte stream into a tempo-resolved note sequence.
///
/// Note-on with velocity 0 is a note-off. A note-on for a key that is already
/// sounding on the same channel closes the previous note first. Note-ons still
/// open at the end of their track are closed there and counted in
/// [`NoteSequence::unmatched_note_ons`].
pub fn parse_midi(bytes: &[u8]) -> Result<NoteSequence, MidiError> {
    let mut r = Reader::new(bytes);
    if r.take(4) != Some(b"MThd") {
        return Err(MidiError::BadHeader("missing MThd"));
    }
    let header_len = r.u32().ok_or(MidiError::BadHeader("truncated header"))? as usize;
    if header_len < 6 {
        return Err(MidiError::BadHeader("header shorter than 6 bytes"));
    }
    let header = r.take(header_len).ok_or(MidiError::BadHeader("truncated header"))?;
    let format = u16::from_be_bytes([header[0], header[1]]);
    let n_tracks = u16::from_be_bytes([header[2], header[3]]) as usize;
    let division = u16::from_be_bytes([header[4], header[5]]);
    if format > 1 {
        return Err(MidiError::UnsupportedFormat(format));
    }
    if division & 0x8000 != 0 {
        return Err(MidiError::SmpteTiming);
    }
    if division == 0 {
        return Err(MidiError::BadHeader("zero ticks per quarter note"));
    }

    let mut tracks = Vec::with_capacity(n_tracks);
    while tracks.len() < n_tracks {
        let index = tracks.len();
        let kind = r.take(4).ok_or(MidiError::TruncatedTrack { track: index })?;
        let len = r.u32().ok_or(MidiError::TruncatedTrack { track: index })? as usize;
        let body = r.take(len).ok_or(MidiError::TruncatedTrack { track: index })?;
        if kind == b"MTrk" {
            tracks.push(read_track(body, index)?);
        }
    }

    let tempo = TempoMap::new(&tracks, division);
    let mut notes = Vec::new();
    let mut pedal = Vec::new();
    let mut unmatched = 0;
    let mut end = 0.0f64;
    for track in &tracks {
        unmatched += pair_notes(track, &tempo, &mut notes);
        collect_sustain(track, &tempo, &mut pedal);
        end = end.max(tempo.seconds(track.end_tick));
    }

    let mut seq = NoteSequence::new(notes, end, division)?.with_sustain(pedal);
    seq.unmatched_note_ons = unmatched;
    Ok(seq)
}

fn read_track(body: &[u8], track: usize) -> Result<Track, MidiError> {
    let mut r = Reader::new(body);
    let truncated = MidiError::TruncatedTrack { track };
    let mut tick = 0u64;
    let mut running: Option<u8> = None;
    let mut events = Vec::new();

    while r.remaining() > 0 {
        tick += u64::from(r.varlen().ok_or(truncated.clone())?);
        let event_start = r.pos;
        let first = r.u8().ok_or(truncated.clone())?;
        let status = if first & 0x80 != 0 {
            first
        } else {
            // running status: `first` is already the first data byte
            r.pos -= 1;
            running.ok_or(MidiError::MalformedEvent { track, offset: event_start })?
        };
        match status {
            0xff => {
                running = None;
                let kind = r.u8().ok_or(truncated.clone())?;
                let len = r.varlen().ok_or(truncated.clone())? as usize;
                let data = r.take(len).ok_or(truncated.clone())?;
                match kind {
                    0x51 if len == 3 => {
                        let us = u32::from_be_bytes([0, data[0], data[1], data[2]]);
                        if us > 0 {
                            events.push((tick, Event::Tempo(us)));
                        }
                    }
                    0x2f => return Ok(Track { events, end_tick: tick }),
                    _ => {}
                }
            }
            0xf0 | 0xf7 => {
                running = None;
                let len = r.varlen().ok_or(truncated.clone())? as usize;
                r.take(len).ok_or(truncated.clone())?;
            }
            0x80..=0xef => {
                running = Some(status);
                let n_data = if matches!(status & 0xf0, 0xc0 | 0xd0) { 1 } else { 2 };
                let data = r.take(n_data).ok_or(truncated.clone())?;
                if data.iter().any(|b| b & 0x80 != 0) {
                    return Err(MidiError::MalformedEvent { track, offset: event_start });
                }
                let channel = status & 0x0f;
                match status & 0xf0 {
                    0x80 => events.push((tick, Event::NoteOff { channel, key: data[0] })),
                    0x90 if data[1] == 0 => events.push((tick, Event::NoteOff { channel, key: data[0] })),
                    0x90 => events.push((tick, Event::NoteOn { channel, key: data[0], velocity: data[1] })),
                    0xb0 if data[0] == SUSTAIN_CONTROLLER => {
                        events.push((tick, Event::Sustain { channel, down: data[1] >= 64 }))
                    }
                    _ => {}
                }
            }
            _ => return Err(MidiError::MalformedEvent { track, offset: event_start }),
        }
    }
    // Missing end-of-track meta event is tolerated.
    Ok(Track { events, end_tick: tick })
}

/// Piecewise-constant tempo: `(tick, seconds at tick, microseconds per quarter)`.
struct TempoMap {
    segments: Vec<(u64, f64, u32)>,
    ticks_per_quarter: f64,
}

impl TempoMap {
    fn new(tracks: &[Track], ticks_per_quarter: u16) -> Self {
        let mut changes: Vec<(u64, u32)> = tracks
            .iter()
            .flat_map(|t| t.events.iter())
            .filter_map(|&(tick, e)| match e {
                Event::Tempo(us) => Some((tick, us)),
                _ => None,
            })
            .collect();
        changes.sort_by_key(|&(tick, _)| tick);

        let tpq = f64::from(ticks_per_quarter);
        let mut segments = vec![(0u64, 0.0f64, DEFAULT_US_PER_QUARTER)];
        for (tick, us) in changes {
            let &(t0, s0, us0) = segments.last().unwrap();
            let seconds = s0 + (tick - t0) as f64 * f64::from(us0) / (1e6 * tpq);
            if tick == t0 {
                // later change at the same tick wins
                *segments.last_mut().unwrap() = (tick, s0, us);
            } else {
                segments.push((tick, seconds, us));
            }
        }
        Self { segments, ticks_per_quarter: tpq }
    }

    fn seconds(&self, tick: u64) -> f64 {
        let i = self.segments.partition_point(|&(t, _, _)| t <= tick) - 1;
        let (t0, s0, us) = self.segments[i];
        s0 + (tick - t0) as f64 * f64::from(us) / (1e6 * self.ticks_per_quarter)
    }
}

/// Matches note-ons to note-offs per channel and key; returns the number of
/// notes closed at end of track.
fn pair_notes(track: &Track, tempo: &TempoMap, out: &mut Vec<NoteEvent>) -> usize {
    let mut open = [[None::<(u64, u8)>; 128]; 16];
    let mut emit = |key: u8, start: u64, stop: u64, velocity: u8| {
        let onset = tempo.seconds(start);
        let offset = tempo.seconds(stop);
        if offset > onset {
            out.push(NoteEvent { pitch: key, onset, offset, velocity });
        }
    };
    for &(tick, event) in &track.events {
        match event {
            Event::NoteOn { channel, key, velocity } => {
                let slot = &mut open[channel as usize][key as usize];
                if let Some((start, vel)) = slot.take() {
                    emit(key, start, tick, vel);
                }
                *slot = Some((tick, velocity));
            }
            Event::NoteOff { channel, key } => {
                if let Some((start, vel)) = open[channel as usize][key as usize].take() {
                    emit(key, start, tick, vel);
                }
            }
            _ => {}
        }
    }
    let mut unmatched = 0;
    for channel in open.iter_mut() {
        for (key, slot) in channel.iter_mut().enumerate() {
            if let Some((start, vel)) = slot.take() {
                unmatched += 1;
                emit(key as u8, start, track.end_tick, vel);
            }
        }
    }
    unmatched
}

fn collect_sustain(track: &Track, tempo: &TempoMap, out: &mut Vec<(f64, f64)>) {
    let mut down_since = [None::<u64>; 16];
    for &(tick, event) in &track.events {
        if let Event::Sustain { channel, down } = event {
            let state = &mut down_since[channel as usize];
            match (down, *state) {
                (true, None) => *state = Some(tick),
                (false, Some(start)) => {
                    out.push((tempo.seconds(start), tempo.seconds(tick)));
                    *state = None;
                }
                _ => {}
            }
        }
    }
    for start in down_since.into_iter().flatten() {
        out.push((tempo.seconds(start), tempo.seconds(track.end_tick)));
    }
}

fn push_varlen(out: &mut Vec<u8>, mut value: u32) {
    let mut buf = [0u8; 4];
    let mut n = 0;
    loop {
        buf[n] = (value & 0x7f) as u8;
        n += 1;
        value >>= 7;
        if value == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        out.push(if i > 0 { buf[i] | 0x80 } else { buf[i] });
    }
}

/// Encodes a sequence as a format-0 SMF at 120 BPM on channel 0.
///
/// Times are quantized to ticks, so notes shorter than one tick are lost.
/// Sustain intervals are written as controller 64 on/off pairs.
pub fn write_smf(seq: &NoteSequence, ticks_per_quarter: u16) -> Vec<u8> {
    let ticks_per_second = f64::from(ticks_per_quarter) * 1e6 / f64::from(DEFAULT_US_PER_QUARTER);
    let to_tick = |s: f64| (s * ticks_per_second).round() as u64;

    // (tick, order, bytes); offs sort before ons at the same tick
    let mut events: Vec<(u64, u8, [u8; 3])> = Vec::new();
    for n in seq.notes() {
        events.push((to_tick(n.onset), 1, [0x90, n.pitch, n.velocity]));
        events.push((to_tick(n.offset), 0, [0x80, n.pitch, 0]));
    }
    for &(a, b) in seq.sustain() {
        events.push((to_tick(a), 2, [0xb0, SUSTAIN_CONTROLLER, 127]));
        events.push((to_tick(b), 0, [0xb0, SUSTAIN_CONTROLLER, 0]));
    }
    events.sort_by_key(|&(tick, order, _)| (tick, order));

    let mut body = Vec::new();
    push_varlen(&mut body, 0);
    body.extend_from_slice(&[0xff, 0x51, 0x03]);
    body.extend_from_slice(&DEFAULT_US_PER_QUARTER.to_be_bytes()[1..]);
    let mut last = 0u64;
    for (tick, _, bytes) in &events {
        push_varlen(&mut body, (tick - last) as u32);
        body.extend_from_slice(bytes);
        last = *tick;
    }
    let end = to_tick(seq.duration()).max(last);
    push_varlen(&mut body, (end - last) as u32);
    body.extend_from_slice(&[0xff, 0x2f, 0x00]);

    let mut out = Vec::with_capacity(22 + body.len());
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&ticks_per_quarter.to_be_bytes());
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}
