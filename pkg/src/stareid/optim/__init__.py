from stareid.optim.adam import AdamState
from stareid.optim.adam import adam_step
from stareid.optim.schedule import LrSchedule
from stareid.optim.schedule import lr_at
