from trainer.loop import TrainResult, train
from trainer.metrics import Metrics, evaluate, predict, write_metrics_csv
from trainer.optim import init_velocity, sgd_step
from trainer.schemas import TrainConfig, make_train_config
from trainer.split import split_dataset
