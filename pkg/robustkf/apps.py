from django.apps import AppConfig


class RobustKFConfig(AppConfig):
    name = 'robustkf'
    verbose_name = 'Robust Kalman filtering'
