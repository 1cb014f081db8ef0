//! Market data model: quotes, FX cost mechanics, CSV ingestion and the
//! synthetic generator.

mod panel;
mod quotes;
pub mod scenarios;
mod synth;

pub use panel::{
    load_panel, load_panel_dir, read_instruments, read_quote_file, MarketPanel, QuoteSeries,
    INSTRUMENTS_FILE, INSTRUMENT_HEADER, QUOTE_HEADER,
};
pub use quotes::{
    carry_rates, half_spread, mid, simple_return, tomnext_outright, CarryRates,
    ForwardPointsQuote, InstrumentSpec, QuotePair, TomnextOutright,
};
pub use synth::{forward_points, synth_panel, InstrumentSynth, Regime, SynthConfig};
