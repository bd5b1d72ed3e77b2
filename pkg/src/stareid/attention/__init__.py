from stareid.attention.sta import AttentionMaps
from stareid.attention.sta import ScoreMatrix
from stareid.attention.sta import attention_map
from stareid.attention.sta import split_blocks
from stareid.attention.sta import block_scores
from stareid.attention.sta import normalize_scores
from stareid.attention.sta import score_matrix
from stareid.attention.sta import inter_frame_reg
from stareid.attention.sta import batch_inter_frame_reg
