# coding=utf-8
import os

basedir = os.path.abspath(os.path.dirname(__file__))


class Config(object):
    DEBUG = False
    TESTING = False
    LOG_LEVEL = 'INFO'
    LOG_FILE = os.environ.get('UADPS_LOG_FILE')

    # analysis
    SAMPLE_RATE = 16000
    FFT_SIZE = 512
    HOP = 128

    # DDPM prior
    DIFFUSION_STEPS = 1000
    BETA_START = 1e-4
    BETA_END = 0.02

    # refinement
    T_START = 300
    XI = 0.4
    ALPHA = 0.5
    ETA = 0.95
    GAMMA = 1e-3
    N_TAPS = 13
    CAUSAL_OFFSET = 0
    ALIGN_TAPS = 1
    STRIDE = 1
    GRAD_MODE = 'detached'
    THROUGH_FCP = False
    EPS_MAG = 1e-8
    LOAD_DELTA = 1e-4
    RIDGE = 1e-10
    ALIGN_RIDGE = 1e-12
    DENOISER = 'gaussian:1.0'
    SEED = int(os.environ.get('UADPS_SEED') or 0)
    JOBS = 1
    DENOISER_PAD_FRAMES = 0
    DENOISER_TIMEOUT = 5.0

    # synthetic scenes
    N_CHANNELS = 4
    N_SOURCES = 1
    SCENE_TAPS = 4
    NOISE = 'white'
    NOISE_PARAM = 1.0
    SNR_DB = 0.0
    PSEUDO_SISDR_DB = 5.0
    DURATION_S = 2.0

    # gradient check
    PROBES = 64
    FD_STEP = 1e-4
    GRAD_THRESHOLD = 1e-3
    CHECK_STEP = 100

    # ablation grid
    XI_GRID = '0.2,0.4,0.6,0.8,1.0,1.2'
    T_GRID = '100,200,300,400,500'
    ALPHA_GRID = '0,0.1,0.3,0.5,0.7,0.9,1.0'


class DevelopmentConfig(Config):
    DEBUG = True
    LOG_LEVEL = 'DEBUG'


class TestingConfig(Config):
    TESTING = True
    LOG_LEVEL = 'WARNING'
    DURATION_S = 0.5
    FFT_SIZE = 128
    HOP = 32


class ProductionConfig(Config):
    LOG_FILE = os.environ.get('UADPS_LOG_FILE') or os.path.join(
        basedir, 'uadps.log')


config = {'development': DevelopmentConfig, 'testing': TestingConfig,
          'production': ProductionConfig, 'default': DevelopmentConfig}
