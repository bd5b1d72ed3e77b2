from stareid.losses.triplet import batch_hard_triplet
from stareid.losses.triplet import triplet_terms
from stareid.losses.softmax import softmax_xent
from stareid.losses.objective import LabeledBatch
from stareid.losses.objective import LossReport
from stareid.losses.objective import total_objective
