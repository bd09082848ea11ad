"""Perpetual network codes: banded random encoding, decoding and recoding."""

from .codec import (
    CodeConfig,
    CodingVector,
    Encoder,
    EncoderMode,
    MalformedPacketError,
    Packet,
    compact,
    deserialize,
    encode,
    expand,
    serialize,
    vector_bits,
)
from .decoder import ConsumeOutcome, Decoder, DecoderStateError, Outcome
from .recoder import RecodeKind, RecodeOutcome, RecodePolicy, Recoder, recode_active, recode_hybrid
from .rlnc import DensePacket, RlncDecoder, RlncEncoder

__version__ = "0.1.0"
