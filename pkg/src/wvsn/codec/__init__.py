"""Simplified ROI-aware intra video codec with frequency selection."""
from .entropy import Bitstream, EntropyDecodeError, block_code_lengths, decode_blocks, encode_blocks
from .frames import (
    HEADER_BITS, CodecConfig, EncodedFrame, EncodedPacket, Frame, FrameLayout, MacroblockLabel,
    assemble_frame, decode_frame, decode_packet, encode_frame, frame_layout, packet_bit_lengths, partition_roi,
)
from .quality import PSNR_CAP, psnr
from .source import read_luma, synth_source, write_luma
from .transform import frequency_select, qstep, transform_quantize, dequantize_inverse

__all__ = [
    "Bitstream", "EntropyDecodeError", "block_code_lengths", "decode_blocks", "encode_blocks",
    "HEADER_BITS", "CodecConfig", "EncodedFrame", "EncodedPacket", "Frame", "FrameLayout", "MacroblockLabel",
    "assemble_frame", "frame_layout", "decode_frame", "decode_packet", "encode_frame", "packet_bit_lengths", "partition_roi",
    "PSNR_CAP", "psnr", "read_luma", "synth_source", "write_luma",
    "frequency_select", "qstep", "transform_quantize", "dequantize_inverse",
]
