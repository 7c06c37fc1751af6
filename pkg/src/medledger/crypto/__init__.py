from . import rlp
from .hashing import keccak256
from .keys import (
    HALF_N,
    SECP256K1_N,
    ZERO_ADDRESS,
    InvalidAddress,
    InvalidKey,
    InvalidSignature,
    PrivateKey,
    PublicKey,
    Signature,
    contract_address,
    derive_address,
    derive_public,
    encode_personal_message,
    personal_message_digest,
    recover,
    recover_public,
    sign,
    to_address,
    to_checksum_address,
    to_hex_address,
    verify,
)
from .rlp import RLPError

rlp_encode = rlp.encode
rlp_decode = rlp.decode

__all__ = [
    "HALF_N",
    "SECP256K1_N",
    "ZERO_ADDRESS",
    "InvalidAddress",
    "InvalidKey",
    "InvalidSignature",
    "PrivateKey",
    "PublicKey",
    "RLPError",
    "Signature",
    "contract_address",
    "derive_address",
    "derive_public",
    "encode_personal_message",
    "keccak256",
    "personal_message_digest",
    "recover",
    "recover_public",
    "rlp",
    "rlp_decode",
    "rlp_encode",
    "sign",
    "to_address",
    "to_checksum_address",
    "to_hex_address",
    "verify",
]
